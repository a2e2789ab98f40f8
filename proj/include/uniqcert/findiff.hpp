#pragma once

// Finite-difference stencils of arbitrary even accuracy, applied axis by
// axis. Central stencils in the interior; near the ends of an axis the result
// is either trimmed or completed with one-sided stencils.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/grid.hpp"

namespace uniqcert {

struct Stencil {
    unsigned derivative_order = 1;
    unsigned accuracy_order = 2;
    std::vector<int> offsets;
    std::vector<double> weights;  // divide by h^derivative_order when applied

    std::size_t half_width() const { return offsets.empty() ? 0 : static_cast<std::size_t>(offsets.back()); }
    std::size_t width() const { return offsets.size(); }
};

inline constexpr unsigned kMaxStencilDerivative = 4;
inline constexpr unsigned kMaxAccuracyOrder = 10;

inline bool supported_accuracy(int p) { return p >= 2 && p <= static_cast<int>(kMaxAccuracyOrder) && p % 2 == 0; }

// Half-width of the central stencil: floor((d+1)/2) - 1 + p/2. Zero for d = 0.
inline std::size_t stencil_half_width(unsigned derivative_order, unsigned accuracy_order) {
    if (derivative_order == 0) return 0;
    return (derivative_order + 1) / 2 - 1 + accuracy_order / 2;
}

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

// Solves sum_j w_j o_j^k = d! delta_{k,d}, k = 0..n-1, by exact Gauss-Jordan.
inline std::vector<double> solve_moment_system(const std::vector<int>& offsets, unsigned d) {
    const std::size_t n = offsets.size();
    std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n + 1));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            Rational p = 1;
            for (std::size_t e = 0; e < k; ++e) p *= offsets[j];
            m[k][j] = p;
        }
        Rational rhs = 0;
        if (k == d) {
            rhs = 1;
            for (unsigned i = 2; i <= d; ++i) rhs *= i;
        }
        m[k][n] = rhs;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) throw std::logic_error("singular moment system");
        std::swap(m[piv], m[col]);
        Rational inv = Rational(1) / m[col][col];
        for (auto& v : m[col]) v *= inv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || m[r][col] == 0) continue;
            Rational f = m[r][col];
            for (std::size_t c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = m[j][n].convert_to<double>();
    return w;
}

}  // namespace detail

inline Stencil central_stencil(unsigned derivative_order, unsigned accuracy_order) {
    if (derivative_order < 1 || derivative_order > kMaxStencilDerivative)
        throw OrderError("stencil derivative order must be in [1, " + std::to_string(kMaxStencilDerivative) + "]");
    if (!supported_accuracy(static_cast<int>(accuracy_order)))
        throw OrderError("accuracy order must be one of 2, 4, 6, 8, 10 (got " + std::to_string(accuracy_order) + ")");

    static std::mutex mu;
    static std::map<std::pair<unsigned, unsigned>, Stencil> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(derivative_order, accuracy_order);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const int r = static_cast<int>(stencil_half_width(derivative_order, accuracy_order));
    Stencil s;
    s.derivative_order = derivative_order;
    s.accuracy_order = accuracy_order;
    for (int o = -r; o <= r; ++o) s.offsets.push_back(o);
    s.weights = detail::solve_moment_system(s.offsets, derivative_order);
    cache.emplace(key, s);
    return s;
}

// Forward (offsets 0..w-1) or backward (offsets -(w-1)..0) stencil with
// w = derivative_order + accuracy_order points.
inline Stencil one_sided_stencil(unsigned derivative_order, unsigned accuracy_order, bool forward) {
    if (derivative_order < 1 || derivative_order > kMaxStencilDerivative)
        throw OrderError("stencil derivative order must be in [1, " + std::to_string(kMaxStencilDerivative) + "]");
    if (!supported_accuracy(static_cast<int>(accuracy_order)))
        throw OrderError("accuracy order must be one of 2, 4, 6, 8, 10 (got " + std::to_string(accuracy_order) + ")");

    static std::mutex mu;
    static std::map<std::tuple<unsigned, unsigned, bool>, Stencil> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(derivative_order, accuracy_order, forward);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const int w = static_cast<int>(derivative_order + accuracy_order);
    Stencil s;
    s.derivative_order = derivative_order;
    s.accuracy_order = accuracy_order;
    for (int o = 0; o < w; ++o) s.offsets.push_back(forward ? o : o - (w - 1));
    s.weights = detail::solve_moment_system(s.offsets, derivative_order);
    cache.emplace(key, s);
    return s;
}

// Trim: output only where the central stencil fits (the axis shrinks by the
// half-width at each end). OneSided: keep the full axis and switch to
// forward/backward stencils of the same accuracy near the ends.
enum class Boundary { Trim, OneSided };

namespace detail {

inline double apply_stencil(const std::vector<double>& in, std::size_t at, std::size_t inner, const Stencil& st) {
    double acc = 0.0;
    for (std::size_t j = 0; j < st.offsets.size(); ++j) {
        if (st.weights[j] == 0.0) continue;
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(st.offsets[j]) * static_cast<std::ptrdiff_t>(inner);
        acc += st.weights[j] * in[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(at) + off)];
    }
    return acc;
}

}  // namespace detail

// Differentiates `derivative_order` times along one axis.
inline SampledField apply_along_axis(const SampledField& field, std::size_t axis, unsigned derivative_order,
                                     unsigned accuracy_order, Boundary boundary = Boundary::Trim) {
    const Stencil st = central_stencil(derivative_order, accuracy_order);
    const Axis& ax = field.axis(axis);
    const std::size_t r = st.half_width();
    const std::size_t n = ax.count;
    if (boundary == Boundary::Trim && n < 2 * r + 2)
        throw GridTooSmallError("axis '" + ax.name + "' has " + std::to_string(n) + " points; a " +
                                std::to_string(st.width()) + "-point stencil needs at least " + std::to_string(2 * r + 2));
    const std::size_t side_width = derivative_order + accuracy_order;
    if (boundary == Boundary::OneSided && (n < side_width || n < st.width()))
        throw GridTooSmallError("axis '" + ax.name + "' has " + std::to_string(n) + " points; one-sided " +
                                std::to_string(side_width) + "-point stencils need at least that many");

    const std::size_t inner = field.stride(axis);
    const std::size_t outer = field.point_count() / (n * inner);
    const std::size_t lo = boundary == Boundary::Trim ? r : 0;
    const std::size_t out_count = boundary == Boundary::Trim ? n - 2 * r : n;
    const double scale = std::pow(ax.step, static_cast<int>(derivative_order));
    const auto& in = field.values();
    std::optional<Stencil> fwd, bwd;
    if (boundary == Boundary::OneSided && r > 0) {
        fwd = one_sided_stencil(derivative_order, accuracy_order, true);
        bwd = one_sided_stencil(derivative_order, accuracy_order, false);
    }

    std::vector<double> out(outer * out_count * inner);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < out_count; ++i) {
            const std::size_t pos = i + lo;  // position along the input axis
            const Stencil* use = &st;
            if (boundary == Boundary::OneSided) {
                if (pos < r) use = &*fwd;
                else if (pos + r >= n) use = &*bwd;
            }
            for (std::size_t k = 0; k < inner; ++k) {
                const std::size_t at = (o * n + pos) * inner + k;
                out[(o * out_count + i) * inner + k] = detail::apply_stencil(in, at, inner, *use) / scale;
            }
        }

    std::vector<Axis> axes = field.axes();
    axes[axis].start = ax.coordinate(lo);
    axes[axis].count = out_count;
    return SampledField(std::move(axes), std::move(out), field.label());
}

// Per-axis trim margins of differentiate(field, idx, accuracy_order).
inline std::vector<std::size_t> derivative_margins(const MultiIndex& idx, std::size_t rank, unsigned accuracy_order,
                                                   Boundary boundary = Boundary::Trim) {
    std::vector<std::size_t> m(rank, 0);
    if (boundary == Boundary::OneSided) return m;
    for (std::size_t a = 0; a < rank; ++a) m[a] = stencil_half_width(idx.order_along(a), accuracy_order);
    return m;
}

// Mixed partials are applied time axis first, then x_1, ..., x_m. With Trim
// the result lives on the interior subgrid where every applied stencil fits.
inline SampledField differentiate(const SampledField& field, const MultiIndex& idx, unsigned accuracy_order,
                                  Boundary boundary = Boundary::Trim) {
    if (!supported_accuracy(static_cast<int>(accuracy_order)))
        throw OrderError("accuracy order must be one of 2, 4, 6, 8, 10 (got " + std::to_string(accuracy_order) + ")");
    MultiIndex id = idx.resized(field.space_dims());
    SampledField cur = field;
    for (std::size_t a = 0; a < field.rank(); ++a) {
        unsigned k = id.order_along(a);
        if (k == 0) continue;
        cur = apply_along_axis(cur, a, k, accuracy_order, boundary);
    }
    return SampledField(cur.axes(), cur.values(), derivative_label(id, field.axes()));
}

// A derivative field together with the index of its first point in the
// base grid.
struct DerivativeField {
    SampledField field;
    std::vector<std::size_t> offset;
};

// Produces u_idx at the requested accuracy. Finite differences are one
// implementation; closed-form oracles are another.
using DerivativeSource = std::function<DerivativeField(const MultiIndex&, int accuracy_order)>;

inline DerivativeSource finite_difference_source(const SampledField& field, Boundary boundary = Boundary::Trim) {
    return [field, boundary](const MultiIndex& idx, int accuracy_order) {
        MultiIndex id = idx.resized(field.space_dims());
        const auto p = static_cast<unsigned>(accuracy_order);
        return DerivativeField{differentiate(field, id, p, boundary), derivative_margins(id, field.rank(), p, boundary)};
    };
}

struct ErrorBoundReport {
    double eps = 0.0;
    double h = 0.0;
    double third_derivative_bound = 0.0;
    double bound_value = 0.0;
};

// Worst-case error of the three-point first derivative under measurement
// error eps and |u'''| <= M: eps/h + h^2 M / 6.
inline ErrorBoundReport error_bound(double eps, double h, double third_derivative_bound) {
    if (!(h > 0)) throw DomainError("grid spacing h must be positive");
    if (!(eps >= 0)) throw DomainError("measurement error eps must be nonnegative");
    if (!(third_derivative_bound >= 0)) throw DomainError("third-derivative bound must be nonnegative");
    return {eps, h, third_derivative_bound, eps / h + h * h / 6.0 * third_derivative_bound};
}

}  // namespace uniqcert
