#include <gtest/gtest.h>

#include <cmath>

#include "uniqcert/findiff.hpp"
#include "uniqcert/synth.hpp"

using namespace uniqcert;

namespace {

double factorial(unsigned n) {
    double f = 1;
    for (unsigned i = 2; i <= n; ++i) f *= i;
    return f;
}

void expect_moments(const Stencil& s, double tol) {
    const unsigned n = static_cast<unsigned>(s.width());
    for (unsigned k = 0; k < n; ++k) {
        double m = 0.0, scale = 0.0;
        for (std::size_t j = 0; j < s.width(); ++j) {
            const double term = s.weights[j] * std::pow(static_cast<double>(s.offsets[j]), static_cast<int>(k));
            m += term;
            scale += std::abs(term);
        }
        const double want = k == s.derivative_order ? factorial(k) : 0.0;
        EXPECT_NEAR(m, want, tol * std::max(1.0, scale))
            << "d=" << s.derivative_order << " p=" << s.accuracy_order << " k=" << k;
    }
}

double max_abs_diff(const SampledField& a, const SampledField& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) e = std::max(e, std::abs(a.values()[i] - b.values()[i]));
    return e;
}

}  // namespace

TEST(FinDiff, KnownCentralWeights) {
    const Stencil s14 = central_stencil(1, 4);
    ASSERT_EQ(s14.offsets, (std::vector<int>{-2, -1, 0, 1, 2}));
    const std::vector<double> w14{1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
    for (std::size_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(s14.weights[j], w14[j]);

    EXPECT_EQ(central_stencil(2, 2).weights, (std::vector<double>{1, -2, 1}));
    EXPECT_EQ(central_stencil(3, 2).weights, (std::vector<double>{-0.5, 1, 0, -1, 0.5}));
    EXPECT_EQ(central_stencil(4, 2).weights, (std::vector<double>{1, -4, 6, -4, 1}));
    EXPECT_EQ(central_stencil(1, 2).weights, (std::vector<double>{-0.5, 0, 0.5}));
}

TEST(FinDiff, HalfWidths) {
    EXPECT_EQ(stencil_half_width(1, 2), 1u);
    EXPECT_EQ(stencil_half_width(2, 2), 1u);
    EXPECT_EQ(stencil_half_width(3, 2), 2u);
    EXPECT_EQ(stencil_half_width(4, 8), 5u);
    EXPECT_EQ(stencil_half_width(1, 10), 5u);
    EXPECT_EQ(central_stencil(3, 6).width(), 2 * stencil_half_width(3, 6) + 1);
    EXPECT_EQ(one_sided_stencil(2, 6, true).width(), 8u);
}

TEST(FinDiff, UnsupportedOrdersAreRejected) {
    EXPECT_THROW(central_stencil(1, 3), OrderError);
    EXPECT_THROW(central_stencil(1, 12), OrderError);
    EXPECT_THROW(central_stencil(0, 2), OrderError);
    EXPECT_THROW(central_stencil(5, 2), OrderError);
    EXPECT_THROW(one_sided_stencil(1, 0, true), OrderError);
}

TEST(FinDiffProperty, MomentConditionsHoldForEverySupportedStencil) {
    for (unsigned d = 1; d <= kMaxStencilDerivative; ++d)
        for (unsigned p = 2; p <= kMaxAccuracyOrder; p += 2) {
            expect_moments(central_stencil(d, p), 1e-12);
            expect_moments(one_sided_stencil(d, p, true), 1e-12);
            expect_moments(one_sided_stencil(d, p, false), 1e-12);
        }
}

TEST(FinDiffProperty, DifferentiateIsExactOnPolynomials) {
    // A polynomial of degree d + p - 1 in x times a quadratic in t.
    for (unsigned d = 1; d <= 4; ++d)
        for (unsigned p = 2; p <= 8; p += 2)
            for (Boundary b : {Boundary::Trim, Boundary::OneSided}) {
                const int deg = static_cast<int>(d + p - 1);
                auto f = tabulate({make_axis("t", -0.5, 0.5, 7), make_axis("x", -1.0, 1.0, 25)},
                                  [deg](const std::vector<double>& q) {
                                      return (1 + q[0] * q[0]) * std::pow(q[1] + 0.3, deg);
                                  });
                MultiIndex idx{0, {d}};
                SampledField got = differentiate(f, idx, p, b);
                const auto off = derivative_margins(idx, 2, p, b);
                double err = 0.0, scale = 0.0;
                for (std::size_t i = 0; i < got.point_count(); ++i) {
                    auto g = got.unflatten(i);
                    const double t = f.axis(0).coordinate(g[0] + off[0]), x = f.axis(1).coordinate(g[1] + off[1]);
                    const double want = (1 + t * t) * factorial(deg) / factorial(deg - d) * std::pow(x + 0.3, deg - static_cast<int>(d));
                    err = std::max(err, std::abs(got.values()[i] - want));
                    scale = std::max(scale, std::abs(want));
                }
                EXPECT_LE(err, 1e-7 * std::max(1.0, scale)) << "d=" << d << " p=" << p;
            }
}

TEST(FinDiff, TrimShrinksAndOneSidedKeepsTheGrid) {
    SampledField f = sample(make_case("sine_wave"), {30, 40});
    const MultiIndex idx{1, {2}};
    SampledField trim = differentiate(f, idx, 4, Boundary::Trim);
    EXPECT_EQ(trim.shape(), (std::vector<std::size_t>{30 - 4, 40 - 4}));
    EXPECT_EQ(derivative_margins(idx, 2, 4), (std::vector<std::size_t>{2, 2}));
    SampledField full = differentiate(f, idx, 4, Boundary::OneSided);
    EXPECT_EQ(full.shape(), f.shape());
    // Interior values agree between the two modes.
    EXPECT_DOUBLE_EQ(full.at({10, 10}), trim.at({8, 8}));
}

TEST(FinDiff, MixedDerivativesCommute) {
    SampledField f = sample(make_case("kdv_soliton", {{"a", 5}, {"c", 1}}), {60, 80});
    for (unsigned p : {2u, 6u}) {
        SampledField tx = apply_along_axis(apply_along_axis(f, 0, 1, p), 1, 1, p);
        SampledField xt = apply_along_axis(apply_along_axis(f, 1, 1, p), 0, 1, p);
        ASSERT_EQ(tx.shape(), xt.shape());
        EXPECT_LE(max_abs_diff(tx, xt), 1e-12);
    }
}

TEST(FinDiff, ErrorIsBoundedByRoundOffPlusTruncation) {
    // eps / h + h^2 M / 6
    EXPECT_DOUBLE_EQ(error_bound(0.0, 0.1, 6.0).bound_value, 0.01);
    EXPECT_DOUBLE_EQ(error_bound(1e-3, 0.1, 0.0).bound_value, 0.01);
    EXPECT_NEAR(error_bound(1e-16, 1.0 / 30.0, std::exp(10.0)).bound_value, std::exp(10.0) / 5400.0, 1e-12);
    EXPECT_THROW(error_bound(1e-16, 0.0, 1.0), DomainError);
    EXPECT_THROW(error_bound(-1.0, 0.1, 1.0), DomainError);
    EXPECT_THROW(error_bound(0.0, 0.1, -1.0), DomainError);
}

TEST(FinDiff, TransportFirstDerivativeErrorWithinBound) {
    AnalyticCase c = make_case("transport_exp", {{"a", 3}});
    SampledField f = sample(c);
    const MultiIndex ux{0, {1}};
    SampledField d = differentiate(f, ux, 2);
    SampledField exact = exact_derivative_field(c, ux, c.default_counts);
    const auto off = derivative_margins(ux, 2, 2);
    double err = 0.0;
    for (std::size_t i = 0; i < d.point_count(); ++i) {
        auto g = d.unflatten(i);
        err = std::max(err, std::abs(d.values()[i] - exact.at({g[0] + off[0], g[1] + off[1]})));
    }
    const double bound = error_bound(1e-16, f.axis(1).step, std::exp(10.0)).bound_value;
    EXPECT_LE(err, bound);
    EXPECT_LE(err, 5.0);
    EXPECT_GE(err, 1e-3 * bound);
}

TEST(FinDiff, GridTooSmallForStencil) {
    SampledField f = sample(make_case("sine_wave"), {5, 5});
    EXPECT_THROW(differentiate(f, MultiIndex{0, {4}}, 10), GridTooSmallError);
}
