#pragma once

// Smallest singular values of feature matrices: the single-order rank test,
// its stabilized variant that tracks the smallest singular value across
// finite-difference accuracy orders, the decay rule, and annihilator
// extraction from the smallest right singular vector.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/features.hpp"
#include "uniqcert/findiff.hpp"
#include "uniqcert/grid.hpp"
#include "uniqcert/parallel.hpp"

namespace uniqcert {

namespace detail {

inline void require_tall(Eigen::Index rows, Eigen::Index cols) {
    if (cols == 0) throw ShapeError("matrix has no columns");
    if (rows < cols)
        throw ShapeError("matrix has " + std::to_string(rows) + " rows but " + std::to_string(cols) +
                         " columns; uniqueness is ill-posed at this sample count");
}

// Thin SVD of a tall matrix: Householder QR, then one-sided Jacobi on R.
struct TallSvd {
    Eigen::VectorXd sigma;  // descending
    Eigen::MatrixXd v;

    explicit TallSvd(const Eigen::MatrixXd& a, bool want_v) {
        require_tall(a.rows(), a.cols());
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, want_v ? Eigen::ComputeFullV : 0);
        sigma = svd.singularValues();
        if (want_v) v = svd.matrixV();
    }
};

}  // namespace detail

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) { return detail::TallSvd(a, false).sigma; }

inline double sigma_min(const Eigen::MatrixXd& a) {
    auto s = singular_values(a);
    return s(s.size() - 1);
}

inline double sigma_min(const FeatureMatrix& m) { return sigma_min(m.columns); }

inline double sigma_max(const FeatureMatrix& m) { return singular_values(m.columns)(0); }

// Number of singular values at or below rel_tol * sigma_max.
inline std::size_t numerical_nullity(const FeatureMatrix& m, double rel_tol) {
    auto s = singular_values(m.columns);
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) <= rel_tol * s(0)) ++n;
    return n;
}

// True ("unique") iff the smallest singular value is at least delta.
inline bool franco(const FeatureMatrix& m, double delta) {
    if (!(delta > 0)) throw DomainError("franco threshold delta must be positive");
    return sigma_min(m) >= delta;
}

inline constexpr double kDefaultRelativeDelta = 1e-6;

// Default threshold: delta = 1e-6 * sigma_max.
inline bool franco(const FeatureMatrix& m) {
    auto s = singular_values(m.columns);
    const double delta = kDefaultRelativeDelta * s(0);
    if (!(delta > 0)) return false;
    return s(s.size() - 1) >= delta;
}

struct SingularSpectrumSeries {
    std::vector<unsigned> orders;
    std::vector<double> sigma_min;
    std::vector<double> sigma_max;
    std::vector<std::pair<std::size_t, std::size_t>> matrix_shape_per_order;
    bool normalized = true;
    std::vector<std::string> notes;
};

// Rounds a requested maximum accuracy order up to even and checks the range.
inline unsigned even_max_order(int requested, std::vector<std::string>* notes = nullptr) {
    int d = requested;
    if (d % 2 != 0) {
        ++d;
        if (notes)
            notes->push_back("max order " + std::to_string(requested) + " rounded up to " + std::to_string(d) +
                             " (central stencils have even accuracy)");
    }
    if (d < 4) throw OrderError("max order must be >= 4 so that at least two orders are compared");
    if (d > static_cast<int>(kMaxAccuracyOrder))
        throw OrderError("max order must be <= " + std::to_string(kMaxAccuracyOrder));
    return static_cast<unsigned>(d);
}

// Stabilized rank computation: for every even accuracy order l = 2..max_order
// all derivatives are recomputed at accuracy l, the feature matrix rebuilt
// and its smallest singular value recorded. The row set is identical across
// orders: the full grid with one-sided boundary stencils, otherwise the
// interior of the widest stencil.
inline SingularSpectrumSeries sfranco_from_source(const std::vector<Axis>& axes, const DerivativeSource& source,
                                                  const FeatureSpec& spec, int max_order) {
    SingularSpectrumSeries out;
    const unsigned d = even_max_order(max_order, &out.notes);
    const auto margin = feature_margins(spec, axes.size(), d);
    for (unsigned l = 2; l <= d; l += 2) out.orders.push_back(l);
    out.sigma_min.resize(out.orders.size());
    out.sigma_max.resize(out.orders.size());
    out.matrix_shape_per_order.resize(out.orders.size());
    out.normalized = spec.normalize;
    parallel_for(out.orders.size(), [&](std::size_t i) {
        FeatureMatrix m = build_from_source(axes, source, spec, out.orders[i], margin);
        const auto sv = singular_values(m.columns);
        out.sigma_min[i] = sv(sv.size() - 1);
        out.sigma_max[i] = sv(0);
        out.matrix_shape_per_order[i] = {m.rows(), m.cols()};
    });
    return out;
}

inline SingularSpectrumSeries sfranco(const SampledField& field, const FeatureSpec& spec, int max_order) {
    return sfranco_from_source(field.axes(), finite_difference_source(field, spec.boundary), spec, max_order);
}

// The matrix sfranco uses at accuracy `order` (same row set as the series).
inline FeatureMatrix sfranco_matrix(const SampledField& field, const FeatureSpec& spec, int max_order, unsigned order) {
    const unsigned d = even_max_order(max_order);
    return build(field, spec, order, feature_margins(spec, field.rank(), d));
}

struct DecayDiagnosis {
    double slope = 0.0;  // least-squares slope of ln sigma_min against order
    double final_sigma = 0.0;
    bool decaying = false;
    double slope_threshold = -1.0;
    double floor_threshold = 1e-4;
};

inline constexpr double kDefaultSlopeThreshold = -1.0;
inline constexpr double kDefaultFloorThreshold = 1e-4;

// decaying == (slope <= slope_threshold) && (final <= floor_threshold * max).
// An exactly zero sigma short-circuits to decaying with slope -inf.
inline DecayDiagnosis diagnose_decay(const SingularSpectrumSeries& s, double slope_threshold = kDefaultSlopeThreshold,
                                     double floor_threshold = kDefaultFloorThreshold) {
    if (s.orders.size() != s.sigma_min.size()) throw ShapeError("series lists differ in length");
    if (s.orders.size() < 3) throw ShapeError("decay diagnosis needs at least three orders");
    DecayDiagnosis d;
    d.slope_threshold = slope_threshold;
    d.floor_threshold = floor_threshold;
    d.final_sigma = s.sigma_min.back();
    double max_sigma = 0.0;
    for (double v : s.sigma_min) {
        if (!(v >= 0)) throw DomainError("negative or NaN singular value in series");
        max_sigma = std::max(max_sigma, v);
        if (v == 0.0) {
            d.slope = -std::numeric_limits<double>::infinity();
            d.decaying = true;
        }
    }
    if (d.decaying) return d;

    const double n = static_cast<double>(s.orders.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < s.orders.size(); ++i) {
        mx += s.orders[i];
        my += std::log(s.sigma_min[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < s.orders.size(); ++i) {
        const double dx = s.orders[i] - mx;
        sxy += dx * (std::log(s.sigma_min[i]) - my);
        sxx += dx * dx;
    }
    d.slope = sxy / sxx;
    d.decaying = d.slope <= slope_threshold && d.final_sigma <= floor_threshold * max_sigma;
    return d;
}

struct Annihilator {
    Eigen::VectorXd coefficients;      // unit norm, over the matrix's columns
    Eigen::VectorXd raw_coefficients;  // unit norm, over the un-normalized columns
    std::vector<std::string> labels;
    double residual = 0.0;  // ||raw * raw_coefficients|| / sqrt(rows)
    double sigma = 0.0;
};

// Right singular vector of the smallest singular value. The sign is fixed so
// that the first coefficient above 1e-6 of the largest is positive.
inline Annihilator annihilator(const FeatureMatrix& m) {
    detail::TallSvd svd(m.columns, true);
    const Eigen::Index k = svd.v.cols();
    Annihilator a;
    a.labels = m.labels;
    a.sigma = svd.sigma(k - 1);
    a.coefficients = svd.v.col(k - 1);
    const double big = a.coefficients.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < k; ++i)
        if (std::abs(a.coefficients(i)) > 1e-6 * big) {
            if (a.coefficients(i) < 0) a.coefficients = -a.coefficients;
            break;
        }
    a.raw_coefficients = a.coefficients;
    if (m.normalized)
        for (Eigen::Index i = 0; i < k; ++i)
            if (!m.zero_columns[static_cast<std::size_t>(i)]) a.raw_coefficients(i) /= m.column_norms[static_cast<std::size_t>(i)];
    a.raw_coefficients.normalize();
    a.residual = (m.raw * a.raw_coefficients).norm() / std::sqrt(static_cast<double>(m.rows()));
    return a;
}

// Largest raw column RMS; scales residuals into relative terms.
inline double raw_column_scale(const FeatureMatrix& m) {
    double s = 0.0;
    for (double n : m.column_norms) s = std::max(s, n);
    return s / std::sqrt(static_cast<double>(std::max<std::size_t>(1, m.rows())));
}

// Fraction of the squared coefficient norm carried by the named columns.
inline double coefficient_mass(const Eigen::VectorXd& c, const std::vector<std::string>& labels,
                               const std::vector<std::string>& subset) {
    double in = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (const auto& s : subset)
            if (labels[i] == s) in += c(static_cast<Eigen::Index>(i)) * c(static_cast<Eigen::Index>(i));
    return in / c.squaredNorm();
}

inline std::optional<double> coefficient_of(const Annihilator& a, const std::string& label, bool raw = true) {
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        if (a.labels[i] == label) return (raw ? a.raw_coefficients : a.coefficients)(static_cast<Eigen::Index>(i));
    return std::nullopt;
}

// "u - 0.999998*u_x = 0": raw coefficients scaled so the largest is +-1;
// terms below 1e-6 are dropped.
inline std::string render_equation(const Annihilator& a) {
    const Eigen::VectorXd& c = a.raw_coefficients;
    Eigen::Index imax = 0;
    c.cwiseAbs().maxCoeff(&imax);
    const double scale = c(imax);
    std::ostringstream s;
    bool first = true;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        double v = c(i) / scale;
        if (std::abs(v) < 1e-6) continue;
        char buf[48];
        double mag = std::abs(v);
        if (first) {
            s << (v < 0 ? "-" : "");
        } else {
            s << (v < 0 ? " - " : " + ");
        }
        first = false;
        if (std::abs(mag - 1.0) < 5e-7) {
            s << a.labels[static_cast<std::size_t>(i)];
        } else {
            std::snprintf(buf, sizeof buf, "%.6g", mag);
            s << buf << '*' << a.labels[static_cast<std::size_t>(i)];
        }
    }
    s << " = 0";
    return s.str();
}

inline std::string series_csv(const SingularSpectrumSeries& s) {
    std::string out = "order,sigma_min\n";
    for (std::size_t i = 0; i < s.orders.size(); ++i)
        out += std::to_string(s.orders[i]) + "," + detail::format_real(s.sigma_min[i]) + "\n";
    return out;
}

inline std::string annihilator_csv(const Annihilator& a) {
    std::string out = "label,coefficient\n";
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        out += a.labels[i] + "," + detail::format_real(a.raw_coefficients(static_cast<Eigen::Index>(i))) + "\n";
    return out;
}

}  // namespace uniqcert
