#pragma once

// Jacobi rank computation: the Jacobian of the feature map
// g = (u_{a1}, ..., u_{ak}) with respect to (t, x_1, ..., x_m) at selected
// grid points, its smallest singular value at a low and a high accuracy
// order, classification of the resulting map, and heat-map emission.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/features.hpp"
#include "uniqcert/findiff.hpp"
#include "uniqcert/grid.hpp"
#include "uniqcert/parallel.hpp"

namespace uniqcert {

// Which grid points enter the map. Interior: every point where all Jacobian
// entries exist at both orders. Strided: every `stride`-th point of that
// interior along each axis. Explicit: listed grid indices, each of which must
// lie in the interior.
struct PointSelector {
    enum class Kind { Interior, Strided, Explicit } kind = Kind::Interior;
    std::size_t stride = 1;
    std::vector<std::vector<std::size_t>> indices;

    static PointSelector interior() { return {}; }
    static PointSelector strided(std::size_t s) { return {Kind::Strided, s, {}}; }
    static PointSelector explicit_points(std::vector<std::vector<std::size_t>> idx) {
        return {Kind::Explicit, 1, std::move(idx)};
    }
};

struct JacobianMap {
    std::vector<Axis> axes;  // the base grid
    std::vector<std::string> input_labels;
    std::vector<std::vector<std::size_t>> point_indices;
    std::vector<std::vector<double>> points;  // coordinates of point_indices
    std::vector<double> sigma_min_low, sigma_min_high;
    std::vector<double> sigma_max_low, sigma_max_high;
    // Row-major k x (m+1) Jacobians, one block per point.
    std::vector<double> jacobian_low, jacobian_high;
    unsigned d1 = 2, d2 = 8;
    int d2_requested = 8;
    std::size_t k = 0;
    std::size_t ambient_dim = 0;
    std::vector<std::string> notes;

    std::size_t size() const { return points.size(); }

    Eigen::MatrixXd jacobian(std::size_t point, bool high) const {
        const auto& src = high ? jacobian_high : jacobian_low;
        Eigen::MatrixXd j(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ambient_dim));
        const std::size_t base = point * k * ambient_dim;
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < ambient_dim; ++c)
                j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = src[base + r * ambient_dim + c];
        return j;
    }
};

// k-th singular value of a k x n matrix (zero when k > n, where rank k is
// impossible) together with the largest one.
inline std::pair<double, double> jacobian_sigma_range(const Eigen::MatrixXd& j) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double smin = j.rows() > j.cols() ? 0.0 : s(s.size() - 1);
    return {smin, smax};
}

namespace detail {

// Margin along each axis needed so that d(u_a)/d(axis) exists at `order`.
inline std::vector<std::size_t> jacobian_margins(const std::vector<FeatureInput>& inputs, std::size_t rank,
                                                 unsigned order) {
    std::vector<std::size_t> m(rank, 0);
    for (const auto& in : inputs) {
        const auto* idx = std::get_if<MultiIndex>(&in);
        if (!idx) continue;
        for (std::size_t a = 0; a < rank; ++a)
            for (std::size_t b = 0; b < rank; ++b) {
                const std::size_t need =
                    stencil_half_width(idx->order_along(b), order) + (a == b ? stencil_half_width(1, order) : 0);
                m[b] = std::max(m[b], need);
            }
    }
    return m;
}

struct EntryField {
    SampledField field;
    std::vector<std::size_t> offset;
    double constant = 0.0;
    bool is_constant = false;
};

// entries[r][c] = d(g_r)/d(axis c) at accuracy `order`, as trimmed fields.
inline std::vector<std::vector<EntryField>> jacobian_entry_fields(const SampledField& field,
                                                                  const std::vector<FeatureInput>& inputs,
                                                                  unsigned order) {
    const std::size_t rank = field.rank();
    std::vector<std::vector<EntryField>> out(inputs.size(), std::vector<EntryField>(rank));
    parallel_for(inputs.size() * rank, [&](std::size_t job) {
        const std::size_t r = job / rank, c = job % rank;
        EntryField& e = out[r][c];
        if (const auto* co = std::get_if<Coordinate>(&inputs[r])) {
            e.is_constant = true;
            e.constant = co->axis == c ? 1.0 : 0.0;
            return;
        }
        const MultiIndex idx = std::get<MultiIndex>(inputs[r]).resized(field.space_dims());
        SampledField g = differentiate(field, idx, order, Boundary::Trim);
        auto off = derivative_margins(idx, rank, order, Boundary::Trim);
        e.field = apply_along_axis(g, c, 1, order, Boundary::Trim);
        off[c] += stencil_half_width(1, order);
        e.offset = std::move(off);
    });
    return out;
}

inline double entry_at(const EntryField& e, const std::vector<std::size_t>& base_idx) {
    if (e.is_constant) return e.constant;
    std::vector<std::size_t> local(base_idx.size());
    for (std::size_t a = 0; a < base_idx.size(); ++a) local[a] = base_idx[a] - e.offset[a];
    return e.field.at(local);
}

}  // namespace detail

// Rounds d2 up to even (with a note), checks 2 <= d1 < d2 <= 10.
inline std::pair<unsigned, unsigned> jrc_orders(int d1, int d2, std::vector<std::string>* notes = nullptr) {
    if (d1 % 2 != 0) throw OrderError("d1 must be even (got " + std::to_string(d1) + ")");
    int e2 = d2;
    if (e2 % 2 != 0) {
        ++e2;
        if (notes)
            notes->push_back("d2 " + std::to_string(d2) + " rounded up to " + std::to_string(e2) +
                             " (central stencils have even accuracy)");
    }
    if (!supported_accuracy(d1) || !supported_accuracy(e2))
        throw OrderError("jrc orders must lie in {2, 4, 6, 8, 10}");
    if (!(d1 < e2)) throw OrderError("jrc needs d1 < d2");
    return {static_cast<unsigned>(d1), static_cast<unsigned>(e2)};
}

inline JacobianMap jrc(const SampledField& field, const std::vector<FeatureInput>& inputs, int d1, int d2,
                       const PointSelector& selector = PointSelector::interior()) {
    if (inputs.empty()) throw ConfigError("jrc needs at least one input");
    for (std::size_t i = 0; i < inputs.size(); ++i)
        for (std::size_t j = i + 1; j < inputs.size(); ++j)
            if (inputs[i] == inputs[j]) throw ConfigError("jrc inputs must be pairwise distinct");

    JacobianMap map;
    std::tie(map.d1, map.d2) = jrc_orders(d1, d2, &map.notes);
    map.d2_requested = d2;
    map.axes = field.axes();
    map.k = inputs.size();
    map.ambient_dim = field.rank();
    for (const auto& in : inputs) map.input_labels.push_back(input_label(in, field.axes()));

    const std::size_t rank = field.rank();
    const auto margin = detail::jacobian_margins(inputs, rank, map.d2);
    std::vector<std::size_t> lo(rank), count(rank);
    for (std::size_t a = 0; a < rank; ++a) {
        const std::size_t n = field.axis(a).count;
        if (n < 2 * margin[a] + 1)
            throw GridTooSmallError("axis '" + field.axis(a).name + "' has " + std::to_string(n) +
                                    " points; the Jacobian at accuracy " + std::to_string(map.d2) + " needs at least " +
                                    std::to_string(2 * margin[a] + 1));
        lo[a] = margin[a];
        count[a] = n - 2 * margin[a];
    }

    switch (selector.kind) {
        case PointSelector::Kind::Interior:
        case PointSelector::Kind::Strided: {
            const std::size_t s = selector.kind == PointSelector::Kind::Interior ? 1 : selector.stride;
            if (s == 0) throw SelectorError("stride must be positive");
            std::vector<std::size_t> per(rank);
            std::size_t total = 1;
            for (std::size_t a = 0; a < rank; ++a) {
                per[a] = (count[a] + s - 1) / s;
                total *= per[a];
            }
            map.point_indices.reserve(total);
            std::vector<std::size_t> it(rank, 0);
            for (std::size_t p = 0; p < total; ++p) {
                std::vector<std::size_t> idx(rank);
                for (std::size_t a = 0; a < rank; ++a) idx[a] = lo[a] + it[a] * s;
                map.point_indices.push_back(std::move(idx));
                for (std::size_t a = rank; a-- > 0;) {
                    if (++it[a] < per[a]) break;
                    it[a] = 0;
                }
            }
            break;
        }
        case PointSelector::Kind::Explicit:
            for (const auto& idx : selector.indices) {
                if (idx.size() != rank) throw SelectorError("point index has the wrong number of axes");
                for (std::size_t a = 0; a < rank; ++a)
                    if (idx[a] < lo[a] || idx[a] >= lo[a] + count[a])
                        throw SelectorError("point index " + std::to_string(idx[a]) + " on axis '" +
                                            field.axis(a).name + "' is outside the Jacobian interior [" +
                                            std::to_string(lo[a]) + ", " + std::to_string(lo[a] + count[a]) + ")");
                map.point_indices.push_back(idx);
            }
            break;
    }
    if (map.point_indices.empty()) throw SelectorError("point selector is empty");

    const std::size_t npts = map.point_indices.size();
    map.points.resize(npts);
    for (std::size_t p = 0; p < npts; ++p) {
        map.points[p].resize(rank);
        for (std::size_t a = 0; a < rank; ++a) map.points[p][a] = field.axis(a).coordinate(map.point_indices[p][a]);
    }

    const std::size_t block = map.k * rank;
    for (bool high : {false, true}) {
        const unsigned order = high ? map.d2 : map.d1;
        const auto entries = detail::jacobian_entry_fields(field, inputs, order);
        auto& jac = high ? map.jacobian_high : map.jacobian_low;
        auto& smin = high ? map.sigma_min_high : map.sigma_min_low;
        auto& smax = high ? map.sigma_max_high : map.sigma_max_low;
        jac.assign(npts * block, 0.0);
        smin.assign(npts, 0.0);
        smax.assign(npts, 0.0);
        parallel_for(npts, [&](std::size_t p) {
            Eigen::MatrixXd j(static_cast<Eigen::Index>(map.k), static_cast<Eigen::Index>(rank));
            for (std::size_t r = 0; r < map.k; ++r)
                for (std::size_t c = 0; c < rank; ++c) {
                    const double v = detail::entry_at(entries[r][c], map.point_indices[p]);
                    j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
                    jac[p * block + r * rank + c] = v;
                }
            std::tie(smin[p], smax[p]) = jacobian_sigma_range(j);
        });
    }
    return map;
}

inline std::vector<FeatureInput> as_inputs(const std::vector<MultiIndex>& idx) {
    return {idx.begin(), idx.end()};
}

enum class MapClass { FullRankSomewhere, NowhereFullRank, MixedInconclusive };

inline std::string to_string(MapClass c) {
    switch (c) {
        case MapClass::FullRankSomewhere: return "FULL_RANK_SOMEWHERE";
        case MapClass::NowhereFullRank: return "NOWHERE_FULL_RANK";
        case MapClass::MixedInconclusive: return "MIXED_INCONCLUSIVE";
    }
    return "?";
}

inline constexpr double kDefaultDropFactor = 1e3;
inline constexpr double kDefaultJacobianFloor = 1e-9;
inline constexpr double kFullRankLevel = 1e-3;
inline constexpr double kFullRankFraction = 0.01;

struct MapClassification {
    MapClass kind = MapClass::MixedInconclusive;
    double collapsed_fraction = 0.0;
    double full_rank_fraction = 0.0;  // non-collapsed and well conditioned
    double median_drop = 0.0;         // median of sigma_low / sigma_high
    double drop_factor = kDefaultDropFactor;
    double floor = kDefaultJacobianFloor;
};

// A point is collapsed when sigma_high <= sigma_low / drop_factor or
// sigma_high <= floor * (largest singular value of the high-order Jacobian).
inline bool point_collapsed(const JacobianMap& m, std::size_t p, double drop_factor, double floor) {
    const double hi = m.sigma_min_high[p];
    return hi <= m.sigma_min_low[p] / drop_factor || hi <= floor * m.sigma_max_high[p];
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid - 1), v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

inline MapClassification classify_map(const JacobianMap& m, double drop_factor = kDefaultDropFactor,
                                      double floor = kDefaultJacobianFloor) {
    MapClassification out;
    out.drop_factor = drop_factor;
    out.floor = floor;
    const std::size_t n = m.size();
    if (n == 0) return out;
    std::size_t collapsed = 0, full = 0;
    std::vector<double> drops(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double hi = m.sigma_min_high[p], lo = m.sigma_min_low[p];
        drops[p] = hi > 0 ? lo / hi : std::numeric_limits<double>::infinity();
        if (point_collapsed(m, p, drop_factor, floor)) {
            ++collapsed;
        } else if (hi >= kFullRankLevel * m.sigma_max_high[p]) {
            ++full;
        }
    }
    out.collapsed_fraction = static_cast<double>(collapsed) / static_cast<double>(n);
    out.full_rank_fraction = static_cast<double>(full) / static_cast<double>(n);
    out.median_drop = median(std::move(drops));
    if (collapsed == n) {
        out.kind = MapClass::NowhereFullRank;
    } else if (m.k <= m.ambient_dim && out.full_rank_fraction >= kFullRankFraction) {
        out.kind = MapClass::FullRankSomewhere;
    } else {
        out.kind = MapClass::MixedInconclusive;
    }
    return out;
}

// CSV with one row per point: coordinates, sigma_low, sigma_high and
// ratio = sigma_low / sigma_high.
inline std::string heatmap_csv(const JacobianMap& m) {
    std::string out;
    for (const auto& a : m.axes) out += a.name + ",";
    out += "sigma_low,sigma_high,ratio\n";
    for (std::size_t p = 0; p < m.size(); ++p) {
        for (double c : m.points[p]) out += detail::format_real(c) + ",";
        const double lo = m.sigma_min_low[p], hi = m.sigma_min_high[p];
        const double ratio = hi > 0 ? lo / hi : std::numeric_limits<double>::infinity();
        out += detail::format_real(lo) + "," + detail::format_real(hi) + "," + detail::format_real(ratio) + "\n";
    }
    return out;
}

}  // namespace uniqcert
