#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "uniqcert/rank.hpp"
#include "uniqcert/synth.hpp"

using namespace uniqcert;

namespace {

MultiIndex dx(unsigned k) { return MultiIndex{0, {k}}; }

// Smallest eigenvalue of a symmetric k x k matrix (k <= 3) in closed form.
double smallest_eigenvalue(const Eigen::MatrixXd& g) {
    const auto k = g.rows();
    if (k == 1) return g(0, 0);
    if (k == 2) {
        const double tr = g(0, 0) + g(1, 1), det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        return tr / 2 - std::sqrt(std::max(0.0, tr * tr / 4 - det));
    }
    // trigonometric solution of the characteristic cubic
    const double p1 = g(0, 1) * g(0, 1) + g(0, 2) * g(0, 2) + g(1, 2) * g(1, 2);
    const double q = g.trace() / 3;
    const double p2 = std::pow(g(0, 0) - q, 2) + std::pow(g(1, 1) - q, 2) + std::pow(g(2, 2) - q, 2) + 2 * p1;
    const double p = std::sqrt(p2 / 6);
    const Eigen::Matrix3d b = (g - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(b.determinant() / 2, -1.0, 1.0);
    const double phi = std::acos(r) / 3;
    return q + 2 * p * std::cos(phi + 2 * std::numbers::pi / 3);
}

FeatureMatrix matrix(Eigen::MatrixXd raw, bool normalize = false) {
    std::vector<std::string> labels;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) labels.push_back("c" + std::to_string(j));
    return make_feature_matrix(std::move(raw), std::move(labels), normalize);
}

FeatureSpec linear(std::vector<FeatureInput> in) {
    FeatureSpec s;
    s.inputs = std::move(in);
    return s;
}

}  // namespace

TEST(Rank, IdentityAndDuplicateColumn) {
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 3);
    EXPECT_DOUBLE_EQ(sigma_min(id), 1.0);
    EXPECT_TRUE(franco(matrix(id)));
    EXPECT_TRUE(franco(matrix(id), 0.5));
    Eigen::MatrixXd dup(4, 2);
    dup << 1, 1, 2, 2, 3, 3, 4, 4;
    EXPECT_LE(sigma_min(dup), 1e-15);
    EXPECT_FALSE(franco(matrix(dup)));
    Annihilator a = annihilator(matrix(dup));
    EXPECT_NEAR(a.raw_coefficients(0), 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(a.raw_coefficients(1), -1 / std::sqrt(2.0), 1e-12);
    const std::string eq = render_equation(a);
    EXPECT_TRUE(eq == "c0 - c1 = 0" || eq == "-c0 + c1 = 0") << eq;
}

TEST(Rank, ShapeAndThresholdErrors) {
    EXPECT_THROW(sigma_min(Eigen::MatrixXd::Ones(2, 3)), ShapeError);
    EXPECT_THROW(franco(matrix(Eigen::MatrixXd::Identity(3, 3)), 0.0), DomainError);
}

TEST(RankProperty, SigmaMinMatchesGramEigenvalueOracle) {
    std::mt19937 rng(20240611);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index k = 1 + trial % 3;
        const Eigen::Index rows = 5 + trial;
        Eigen::MatrixXd a(rows, k);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < k; ++j) a(i, j) = n01(rng);
        if (trial % 4 == 3 && k > 1) a.col(k - 1) = a.col(0) + 1e-3 * a.col(k - 1);  // near-dependent
        const double oracle = std::sqrt(std::max(0.0, smallest_eigenvalue(a.transpose() * a)));
        EXPECT_NEAR(sigma_min(a), oracle, 1e-8 * std::max(1.0, oracle)) << "trial " << trial;
    }
}

TEST(RankProperty, AnnihilatorResidualBound) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index rows = 40, k = 2 + trial % 4;
        Eigen::MatrixXd a(rows, k);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < k; ++j) a(i, j) = u(rng) * std::pow(10.0, static_cast<double>(j));
        if (trial % 2) a.col(k - 1) = 3 * a.col(0) - a.col(1) + 1e-6 * a.col(k - 1);
        const FeatureMatrix raw = matrix(a, false), norm = matrix(a, true);
        const Annihilator ar = annihilator(raw), an = annihilator(norm);
        // un-normalized: residual * sqrt(rows) is exactly sigma_min
        EXPECT_NEAR(ar.residual * std::sqrt(static_cast<double>(rows)), ar.sigma, 1e-12 * std::max(1.0, ar.sigma));
        // normalized: the raw residual is at most sigma_min times the largest column RMS
        EXPECT_LE(an.residual, an.sigma * raw_column_scale(norm) * (1 + 1e-10) + 1e-15);
        EXPECT_NEAR(an.raw_coefficients.norm(), 1.0, 1e-12);
        EXPECT_NEAR((norm.columns * an.coefficients).norm(), an.sigma, 1e-10);
    }
}

TEST(Rank, FrancoSeesFullRankOnTransport) {
    SampledField f = sample(make_case("transport_exp", {{"a", 3}}));
    FeatureSpec s = linear({dx(0), dx(1)});
    s.normalize = false;
    const double raw = sigma_min(build(f, s, 2));
    EXPECT_GE(raw, 1.0);
    EXPECT_LE(raw, 100.0);
}

TEST(Rank, DecayDiagnosisExamples) {
    SingularSpectrumSeries decaying{{2, 4, 6, 8}, {1e-1, 1e-4, 1e-7, 1e-10}, {}, {}, true, {}};
    DecayDiagnosis d = diagnose_decay(decaying);
    EXPECT_TRUE(d.decaying);
    EXPECT_NEAR(d.slope, -1.5 * std::log(10.0), 1e-12);
    SingularSpectrumSeries flat{{2, 4, 6, 8}, {0.3, 0.31, 0.29, 0.3}, {}, {}, true, {}};
    EXPECT_FALSE(diagnose_decay(flat).decaying);
    // steep but not far enough below the maximum
    SingularSpectrumSeries shallow{{2, 4, 6}, {1.0, 0.1, 0.01}, {}, {}, true, {}};
    EXPECT_FALSE(diagnose_decay(shallow).decaying);
    SingularSpectrumSeries zero{{2, 4, 6}, {1e-3, 0.0, 1e-9}, {}, {}, true, {}};
    EXPECT_TRUE(diagnose_decay(zero).decaying);
    EXPECT_TRUE(std::isinf(diagnose_decay(zero).slope));
    SingularSpectrumSeries two{{2, 4}, {1.0, 1e-9}, {}, {}, true, {}};
    EXPECT_THROW(diagnose_decay(two), ShapeError);
}

TEST(Rank, EvenMaxOrder) {
    std::vector<std::string> notes;
    EXPECT_EQ(even_max_order(7, &notes), 8u);
    EXPECT_EQ(notes.size(), 1u);
    EXPECT_EQ(even_max_order(10), 10u);
    EXPECT_THROW(even_max_order(2), OrderError);
    EXPECT_THROW(even_max_order(11), OrderError);
}

TEST(Rank, SfrancoSeparatesDependentFromIndependent) {
    SampledField tr = sample(make_case("transport_exp", {{"a", 3}}));
    SingularSpectrumSeries s = sfranco(tr, linear({dx(0), dx(1)}), 8);
    EXPECT_EQ(s.orders, (std::vector<unsigned>{2, 4, 6, 8}));
    EXPECT_EQ(s.matrix_shape_per_order[0], (std::pair<std::size_t, std::size_t>{60000, 2}));
    EXPECT_TRUE(diagnose_decay(s).decaying);
    EXPECT_GE(s.sigma_min.front() / s.sigma_min.back(), 1e4);

    SampledField lg = sample(make_case("linear_growth", {{"a", 1}, {"b", 2}}));
    SingularSpectrumSeries g = sfranco(lg, linear({dx(0), dx(1)}), 8);
    EXPECT_FALSE(diagnose_decay(g).decaying);
    Annihilator a = annihilator(sfranco_matrix(tr, linear({dx(0), dx(1)}), 8, 8));
    EXPECT_NEAR(*coefficient_of(a, "u") / *coefficient_of(a, "u_x"), -1.0, 1e-4);
}

// With exact derivatives every order sees the same matrix: the series is
// flat, so any decay in the finite-difference series comes from stencil error.
TEST(RankProperty, OracleDerivativeSeriesIsFlat) {
    struct Item {
        AnalyticCase c;
        FeatureSpec spec;
    };
    FeatureSpec kdv = linear({dx(0), dx(1), dx(2), dx(3)});
    kdv.kind = FeatureKind::Monomial;
    kdv.degree = 2;
    std::vector<Item> items{{make_case("transport_exp", {{"a", 3}}), linear({dx(0), dx(1)})},
                            {make_case("linear_growth", {{"a", 1}, {"b", 2}}), linear({dx(0), dx(1)})},
                            {make_case("kdv_soliton", {{"a", 5}, {"c", 1}}), kdv},
                            {make_case("sine_wave"), linear({dx(0), dx(1)})}};
    for (const auto& it : items) {
        const std::vector<std::size_t> counts{40, 60};
        const auto axes = it.c.axes(counts);
        SingularSpectrumSeries o = sfranco_from_source(axes, oracle_source(it.c, counts), it.spec, 8);
        for (double v : o.sigma_min) EXPECT_EQ(v, o.sigma_min.front()) << it.c.name;
        if (o.sigma_min.front() > 0) {
            EXPECT_FALSE(diagnose_decay(o).decaying) << it.c.name;
        }
    }
}

TEST(Rank, SubsamplingRowsKeepsSigmaMinWithinFactorFour) {
    SampledField f = sample(make_case("linear_growth", {{"a", 1}, {"b", 2}}));
    FeatureMatrix full = build(f, linear({dx(0), dx(1), MultiIndex{1, {0}}}), 4);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < full.raw.rows(); i += 4) keep.push_back(i);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), full.raw.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = full.raw.row(keep[r]);
    const double a = sigma_min(full), b = sigma_min(make_feature_matrix(sub, full.labels, true));
    EXPECT_LE(std::max(a / b, b / a), 4.0);
}

TEST(Rank, CoefficientMassAndCsv) {
    Eigen::VectorXd c(3);
    c << 0.1, 0.0, 0.995;
    EXPECT_NEAR(coefficient_mass(c, {"u", "u_x", "u_xx"}, {"u_xx"}), 0.995 * 0.995 / c.squaredNorm(), 1e-15);
    SingularSpectrumSeries s{{2, 4}, {0.5, 0.25}, {}, {}, true, {}};
    EXPECT_EQ(series_csv(s), "order,sigma_min\n2,0.5\n4,0.25\n");
}
