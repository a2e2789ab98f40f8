#pragma once

// Feature matrices: columns are evaluated features g_1, ..., g_k (and
// monomials or elementwise maps of them) over the common interior of all
// requested derivative fields. Numerical rank of this matrix decides
// uniqueness.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/findiff.hpp"
#include "uniqcert/grid.hpp"

namespace uniqcert {

enum class FeatureKind { Linear, Monomial, Custom };

// Selects the coordinate of grid axis `axis` (0 = t) as a feature.
struct Coordinate {
    std::size_t axis = 0;
    friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

using FeatureInput = std::variant<MultiIndex, Coordinate>;

inline std::string input_label(const FeatureInput& in, const std::vector<Axis>& axes) {
    if (const auto* c = std::get_if<Coordinate>(&in)) return axes.at(c->axis).name;
    return derivative_label(std::get<MultiIndex>(in), axes);
}

inline FeatureInput parse_input(std::string_view label, const std::vector<Axis>& axes) {
    label = detail::trim(label);
    for (std::size_t a = 0; a < axes.size(); ++a)
        if (label == axes[a].name) return Coordinate{a};
    return parse_derivative_label(label, axes);
}

struct CustomTerm {
    std::string label;
    std::size_t input = 0;  // index into FeatureSpec::inputs
    std::function<double(double)> map;
    std::string token;  // config form, e.g. "pow:3:u_x"; empty for ad-hoc maps
};

struct FeatureSpec {
    FeatureKind kind = FeatureKind::Linear;
    std::vector<FeatureInput> inputs;
    unsigned degree = 1;  // Monomial only
    std::vector<CustomTerm> custom_terms;  // Custom only
    std::optional<bool> include_constant;  // default: Monomial only
    bool normalize = true;
    // Columns with norm <= zero_tolerance * (largest column norm) are treated
    // as identically zero when normalizing.
    double zero_tolerance = 1e-10;
    // One-sided stencils keep every grid point as a row, so all accuracy
    // orders share the full grid.
    Boundary boundary = Boundary::OneSided;

    bool constant() const { return include_constant.value_or(kind == FeatureKind::Monomial); }

    void validate() const {
        if (inputs.empty()) throw ConfigError("feature spec needs at least one input");
        for (std::size_t i = 0; i < inputs.size(); ++i)
            for (std::size_t j = i + 1; j < inputs.size(); ++j)
                if (inputs[i] == inputs[j]) throw ConfigError("feature inputs must be pairwise distinct");
        if (kind == FeatureKind::Monomial && degree < 1) throw ConfigError("monomial degree must be >= 1");
        if (kind != FeatureKind::Custom && !custom_terms.empty())
            throw ConfigError("custom terms are only allowed for kind=custom");
        for (const auto& t : custom_terms)
            if (t.input >= inputs.size() || !t.map) throw ConfigError("custom term '" + t.label + "' is malformed");
    }
};

// Every derivative multi-index a spec needs.
inline std::vector<MultiIndex> derivative_inputs(const FeatureSpec& spec) {
    std::vector<MultiIndex> out;
    for (const auto& in : spec.inputs)
        if (const auto* m = std::get_if<MultiIndex>(&in)) out.push_back(*m);
    return out;
}

// Interior margins the widest input derivative needs at `accuracy_order`.
inline std::vector<std::size_t> feature_margins(const FeatureSpec& spec, std::size_t rank, unsigned accuracy_order) {
    std::vector<std::size_t> m(rank, 0);
    if (spec.boundary == Boundary::OneSided) return m;
    for (const auto& idx : derivative_inputs(spec)) {
        auto d = derivative_margins(idx, rank, accuracy_order);
        for (std::size_t a = 0; a < rank; ++a) m[a] = std::max(m[a], d[a]);
    }
    return m;
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline std::size_t expected_column_count(const FeatureSpec& spec) {
    const std::size_t k = spec.inputs.size();
    const std::size_t c = spec.constant() ? 1 : 0;
    switch (spec.kind) {
        case FeatureKind::Linear: return k + c;
        case FeatureKind::Monomial: return binomial(k + spec.degree, spec.degree) - 1 + c;
        case FeatureKind::Custom: return k + spec.custom_terms.size() + c;
    }
    return 0;
}

// Nondecreasing index tuples of length `degree` over k inputs, lexicographic.
inline std::vector<std::vector<std::size_t>> monomial_exponents(std::size_t k, unsigned degree) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(degree, 0);
    if (k == 0 || degree == 0) return out;
    while (true) {
        out.push_back(cur);
        std::size_t pos = degree;
        while (pos-- > 0) {
            if (cur[pos] + 1 < k) {
                ++cur[pos];
                for (std::size_t q = pos + 1; q < degree; ++q) cur[q] = cur[pos];
                break;
            }
            if (pos == 0) return out;
        }
    }
}

inline std::string monomial_label(const std::vector<std::size_t>& factors, const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < factors.size();) {
        std::size_t j = i;
        while (j < factors.size() && factors[j] == factors[i]) ++j;
        if (!s.empty()) s += '*';
        s += names[factors[i]];
        if (j - i > 1) s += "^" + std::to_string(j - i);
        i = j;
    }
    return s;
}

struct FeatureMatrix {
    Eigen::MatrixXd columns;  // normalized when `normalized`
    Eigen::MatrixXd raw;      // as evaluated
    std::vector<std::string> labels;
    std::vector<double> column_norms;  // Euclidean norms of raw columns
    std::vector<bool> zero_columns;    // numerically zero columns kept as zero
    bool normalized = false;
    unsigned accuracy_order = 0;

    // Rows enumerate this sub-block of the base grid in row-major order.
    std::vector<Axis> base_axes;
    std::vector<std::size_t> interior_offset;
    std::vector<std::size_t> interior_counts;

    std::size_t rows() const { return static_cast<std::size_t>(columns.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(columns.cols()); }

    std::vector<std::size_t> grid_index(std::size_t row) const {
        std::vector<std::size_t> idx(interior_counts.size());
        for (std::size_t a = interior_counts.size(); a-- > 0;) {
            idx[a] = interior_offset[a] + row % interior_counts[a];
            row /= interior_counts[a];
        }
        return idx;
    }

    std::vector<double> coordinates(std::size_t row) const {
        auto idx = grid_index(row);
        std::vector<double> c(idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a) c[a] = base_axes[a].coordinate(idx[a]);
        return c;
    }
};

// Wraps an already evaluated matrix (rows = samples) without grid provenance.
inline FeatureMatrix make_feature_matrix(Eigen::MatrixXd raw, std::vector<std::string> labels, bool normalize,
                                         double zero_tolerance = 1e-10) {
    if (labels.size() != static_cast<std::size_t>(raw.cols())) throw ShapeError("label count does not match columns");
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
        for (Eigen::Index i = 0; i < raw.rows(); ++i)
            if (!std::isfinite(raw(i, j)))
                throw FeatureEvaluationError("feature '" + labels[j] + "' is non-finite at row " + std::to_string(i));
    FeatureMatrix fm;
    fm.labels = std::move(labels);
    fm.normalized = normalize;
    fm.column_norms.resize(raw.cols());
    fm.zero_columns.assign(raw.cols(), false);
    double max_norm = 0.0;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        fm.column_norms[j] = raw.col(j).norm();
        max_norm = std::max(max_norm, fm.column_norms[j]);
    }
    fm.columns = raw;
    if (normalize) {
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            const double n = fm.column_norms[j];
            if (n == 0.0 || n <= zero_tolerance * max_norm) {
                fm.zero_columns[j] = true;
                fm.columns.col(j).setZero();
            } else {
                fm.columns.col(j) /= n;
            }
        }
    }
    fm.interior_counts = {static_cast<std::size_t>(raw.rows())};
    fm.interior_offset = {0};
    fm.base_axes = {Axis{"row", 0.0, 1.0, std::max<std::size_t>(2, raw.rows())}};
    fm.raw = std::move(raw);
    return fm;
}

// Builds the feature matrix from derivatives supplied by `source`. Rows are
// the intersection of every derivative's domain, shrunk further to leave at
// least `min_margin[a]` points at each end of axis a.
inline FeatureMatrix build_from_source(const std::vector<Axis>& base_axes, const DerivativeSource& source,
                                       const FeatureSpec& spec, unsigned accuracy_order,
                                       const std::vector<std::size_t>& min_margin = {}) {
    spec.validate();
    const std::size_t rank = base_axes.size();
    std::vector<std::size_t> lo(rank, 0), hi(rank);
    for (std::size_t a = 0; a < rank; ++a) {
        hi[a] = base_axes[a].count;
        if (a < min_margin.size()) {
            lo[a] = min_margin[a];
            hi[a] = base_axes[a].count > min_margin[a] ? base_axes[a].count - min_margin[a] : 0;
        }
    }

    std::vector<std::optional<DerivativeField>> fields(spec.inputs.size());
    for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
        const auto* idx = std::get_if<MultiIndex>(&spec.inputs[i]);
        if (!idx) {
            if (std::get<Coordinate>(spec.inputs[i]).axis >= rank) throw ConfigError("coordinate axis out of range");
            continue;
        }
        fields[i] = source(idx->resized(rank - 1), static_cast<int>(accuracy_order));
        for (std::size_t a = 0; a < rank; ++a) {
            lo[a] = std::max(lo[a], fields[i]->offset[a]);
            hi[a] = std::min(hi[a], fields[i]->offset[a] + fields[i]->field.axis(a).count);
        }
    }
    std::vector<std::size_t> counts(rank);
    std::size_t rows = 1;
    for (std::size_t a = 0; a < rank; ++a) {
        if (hi[a] <= lo[a]) throw GridTooSmallError("no common interior along axis '" + base_axes[a].name + "'");
        counts[a] = hi[a] - lo[a];
        rows *= counts[a];
    }

    const std::size_t k = spec.inputs.size();
    std::vector<std::string> names;
    Eigen::MatrixXd base(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        names.push_back(input_label(spec.inputs[i], base_axes));
        std::vector<std::size_t> idx(rank, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            double v;
            if (fields[i]) {
                const auto& df = *fields[i];
                std::vector<std::size_t> local(rank);
                for (std::size_t a = 0; a < rank; ++a) local[a] = lo[a] + idx[a] - df.offset[a];
                v = df.field.at(local);
            } else {
                std::size_t ax = std::get<Coordinate>(spec.inputs[i]).axis;
                v = base_axes[ax].coordinate(lo[ax] + idx[ax]);
            }
            base(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = v;
            for (std::size_t a = rank; a-- > 0;) {
                if (++idx[a] < counts[a]) break;
                idx[a] = 0;
            }
        }
    }

    std::vector<Eigen::VectorXd> cols;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < k; ++i) {
        cols.push_back(base.col(static_cast<Eigen::Index>(i)));
        labels.push_back(names[i]);
    }
    if (spec.kind == FeatureKind::Monomial) {
        for (unsigned d = 2; d <= spec.degree; ++d)
            for (const auto& f : monomial_exponents(k, d)) {
                Eigen::VectorXd c = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows));
                for (auto j : f) c.array() *= base.col(static_cast<Eigen::Index>(j)).array();
                cols.push_back(std::move(c));
                labels.push_back(monomial_label(f, names));
            }
    }
    if (spec.constant()) {
        cols.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows)));
        labels.push_back("1");
    }
    for (const auto& t : spec.custom_terms) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(rows));
        for (Eigen::Index r = 0; r < c.size(); ++r) c(r) = t.map(base(r, static_cast<Eigen::Index>(t.input)));
        cols.push_back(std::move(c));
        labels.push_back(t.label);
    }

    Eigen::MatrixXd raw(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) raw.col(static_cast<Eigen::Index>(j)) = cols[j];

    // Report the grid point of the first non-finite entry.
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
        for (Eigen::Index r = 0; r < raw.rows(); ++r)
            if (!std::isfinite(raw(r, j))) {
                std::vector<std::size_t> idx(rank);
                std::size_t rr = static_cast<std::size_t>(r);
                for (std::size_t a = rank; a-- > 0;) {
                    idx[a] = lo[a] + rr % counts[a];
                    rr /= counts[a];
                }
                std::ostringstream msg;
                msg << "feature '" << labels[j] << "' is non-finite at grid point (";
                for (std::size_t a = 0; a < rank; ++a)
                    msg << (a ? ", " : "") << base_axes[a].name << '=' << base_axes[a].coordinate(idx[a]);
                msg << ')';
                throw FeatureEvaluationError(msg.str());
            }

    FeatureMatrix fm = make_feature_matrix(std::move(raw), std::move(labels), spec.normalize, spec.zero_tolerance);
    fm.accuracy_order = accuracy_order;
    fm.base_axes = base_axes;
    fm.interior_offset = lo;
    fm.interior_counts = counts;
    return fm;
}

inline FeatureMatrix build(const SampledField& field, const FeatureSpec& spec, unsigned accuracy_order,
                           const std::vector<std::size_t>& min_margin = {}) {
    return build_from_source(field.axes(), finite_difference_source(field, spec.boundary), spec, accuracy_order,
                             min_margin);
}

// --- text config -----------------------------------------------------------
//
//   kind=monomial; inputs=u,u_x; degree=2; constant=true; normalize=true
//   kind=custom; inputs=u,u_x; terms=exp:u, pow:3:u_x, recip:u
//
// Custom vocabulary: pow:<n>, exp, sin, cos, log, recip; the last field names
// an input column.

inline CustomTerm make_custom_term(const std::string& token, const std::vector<std::string>& input_labels) {
    auto parts = detail::split(token, ':');
    for (auto& p : parts) p = detail::trim(p);
    if (parts.size() < 2) throw ConfigError("custom term '" + token + "' must be op:input or pow:n:input");
    std::string op(parts[0]);
    std::string target(parts.back());
    auto it = std::find(input_labels.begin(), input_labels.end(), target);
    if (it == input_labels.end()) throw ConfigError("custom term refers to unknown input '" + target + "'");
    CustomTerm t;
    t.input = static_cast<std::size_t>(it - input_labels.begin());
    t.token = op;
    if (op == "pow") {
        if (parts.size() != 3) throw ConfigError("pow term must be pow:<n>:<input>");
        int n = static_cast<int>(detail::parse_real(parts[1], "power"));
        t.map = [n](double v) { return std::pow(v, n); };
        t.label = target + "^" + std::to_string(n);
        t.token += ":" + std::to_string(n);
    } else {
        if (parts.size() != 2) throw ConfigError("custom term '" + token + "' must be op:input");
        if (op == "exp") t.map = [](double v) { return std::exp(v); };
        else if (op == "sin") t.map = [](double v) { return std::sin(v); };
        else if (op == "cos") t.map = [](double v) { return std::cos(v); };
        else if (op == "log") t.map = [](double v) { return std::log(v); };
        else if (op == "recip") t.map = [](double v) { return 1.0 / v; };
        else throw ConfigError("unknown custom op '" + op + "'");
        t.label = op == "recip" ? "1/" + target : op + "(" + target + ")";
    }
    t.token += ":" + target;
    return t;
}

inline bool parse_bool(std::string_view v) {
    v = detail::trim(v);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected boolean, got '" + std::string(v) + "'");
}

inline FeatureSpec parse_feature_spec(std::string_view text, const std::vector<Axis>& axes) {
    FeatureSpec spec;
    std::vector<std::string> term_tokens;
    bool have_inputs = false;
    for (auto item : detail::split(text, ';')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("feature config item '" + std::string(item) + "' lacks '='");
        std::string key(detail::trim(item.substr(0, eq)));
        std::string_view val = detail::trim(item.substr(eq + 1));
        if (key == "kind") {
            if (val == "linear") spec.kind = FeatureKind::Linear;
            else if (val == "monomial") spec.kind = FeatureKind::Monomial;
            else if (val == "custom") spec.kind = FeatureKind::Custom;
            else throw ConfigError("unknown feature kind '" + std::string(val) + "'");
        } else if (key == "inputs") {
            for (auto lab : detail::split(val, ',')) spec.inputs.push_back(parse_input(lab, axes));
            have_inputs = true;
        } else if (key == "degree") {
            double d = detail::parse_real(val, "degree");
            if (d < 1 || d != std::floor(d)) throw ConfigError("degree must be a positive integer");
            spec.degree = static_cast<unsigned>(d);
        } else if (key == "constant") {
            spec.include_constant = parse_bool(val);
        } else if (key == "normalize") {
            spec.normalize = parse_bool(val);
        } else if (key == "boundary") {
            if (val == "one_sided") spec.boundary = Boundary::OneSided;
            else if (val == "trim") spec.boundary = Boundary::Trim;
            else throw ConfigError("boundary must be one_sided or trim");
        } else if (key == "zero_tolerance") {
            spec.zero_tolerance = detail::parse_real(val, "zero_tolerance");
        } else if (key == "terms") {
            for (auto tok : detail::split(val, ',')) term_tokens.emplace_back(detail::trim(tok));
        } else {
            throw ConfigError("unknown feature config key '" + key + "'");
        }
    }
    if (!have_inputs) throw ConfigError("feature config needs inputs=...");
    std::vector<std::string> labels;
    for (const auto& in : spec.inputs) labels.push_back(input_label(in, axes));
    for (const auto& tok : term_tokens) spec.custom_terms.push_back(make_custom_term(tok, labels));
    spec.validate();
    return spec;
}

inline std::string to_config_string(const FeatureSpec& spec, const std::vector<Axis>& axes) {
    std::ostringstream s;
    s << "kind=" << (spec.kind == FeatureKind::Linear ? "linear" : spec.kind == FeatureKind::Monomial ? "monomial" : "custom");
    s << "; inputs=";
    for (std::size_t i = 0; i < spec.inputs.size(); ++i) s << (i ? "," : "") << input_label(spec.inputs[i], axes);
    if (spec.kind == FeatureKind::Monomial) s << "; degree=" << spec.degree;
    s << "; constant=" << (spec.constant() ? "true" : "false");
    s << "; normalize=" << (spec.normalize ? "true" : "false");
    s << "; boundary=" << (spec.boundary == Boundary::Trim ? "trim" : "one_sided");
    if (!spec.custom_terms.empty()) {
        s << "; terms=";
        for (std::size_t i = 0; i < spec.custom_terms.size(); ++i)
            s << (i ? "," : "") << (spec.custom_terms[i].token.empty() ? spec.custom_terms[i].label : spec.custom_terms[i].token);
    }
    return s.str();
}

}  // namespace uniqcert
