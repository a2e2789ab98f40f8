#pragma once

// Regularly gridded scalar fields u(t, x_1, ..., x_m), derivative
// multi-indices, and the grid CSV format.
//
// Grid CSV layout:
//
//   # axes: t:<start>:<step>:<count>, x:<start>:<step>:<count>[, ...]
//   # label: <text>
//   i_t,i_x1,...,value
//
// One data row per grid point in row-major order, values with 17
// significant digits. On ingest an axis may instead be given by its explicit
// coordinates, `t:[0 0.05 0.1]`; the list must be uniform to 1e-12 relative.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uniqcert/errors.hpp"

namespace uniqcert {

struct Axis {
    std::string name;
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 2;

    double coordinate(std::size_t i) const { return start + static_cast<double>(i) * step; }
    double end() const { return coordinate(count - 1); }

    void validate() const {
        if (!(step > 0.0) || !std::isfinite(step))
            throw ValidationError("axis '" + name + "': step must be positive and finite");
        if (!std::isfinite(start))
            throw ValidationError("axis '" + name + "': start must be finite");
        if (count < 2) throw ValidationError("axis '" + name + "': count must be >= 2");
        if (name.empty()) throw ValidationError("axis name must not be empty");
    }

    friend bool operator==(const Axis&, const Axis&) = default;
};

// Axis spanning [lo, hi] with `count` equispaced samples, endpoints included.
inline Axis make_axis(std::string name, double lo, double hi, std::size_t count) {
    if (count < 2) throw ValidationError("axis '" + name + "': count must be >= 2");
    if (!(hi > lo)) throw ValidationError("axis '" + name + "': empty interval");
    Axis a{std::move(name), lo, (hi - lo) / static_cast<double>(count - 1), count};
    a.validate();
    return a;
}

// Derivative specification: time_order derivatives in t, space_orders[i]
// derivatives in x_{i+1}.
struct MultiIndex {
    unsigned time_order = 0;
    std::vector<unsigned> space_orders;

    static constexpr unsigned kDefaultMaxOrder = 4;

    unsigned total_order() const {
        return time_order + std::accumulate(space_orders.begin(), space_orders.end(), 0u);
    }
    bool is_zero() const { return total_order() == 0; }

    // Order along grid axis `axis` (0 is time).
    unsigned order_along(std::size_t axis) const {
        if (axis == 0) return time_order;
        return axis - 1 < space_orders.size() ? space_orders[axis - 1] : 0u;
    }

    // Padded to `space_dims` spatial axes; throws when nonzero orders exceed it.
    MultiIndex resized(std::size_t space_dims) const {
        MultiIndex r = *this;
        for (std::size_t i = space_dims; i < r.space_orders.size(); ++i)
            if (r.space_orders[i] != 0)
                throw ValidationError("multi-index refers to a spatial axis the field lacks");
        r.space_orders.resize(space_dims, 0u);
        return r;
    }

    void check_order(unsigned max_total = kDefaultMaxOrder) const {
        if (total_order() > max_total)
            throw OrderError("derivative order " + std::to_string(total_order()) +
                             " exceeds maximum " + std::to_string(max_total));
    }

    friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
        std::size_t n = std::max(a.space_orders.size(), b.space_orders.size());
        return a.time_order == b.time_order && a.resized(n).space_orders == b.resized(n).space_orders;
    }
};

// "u", "u_x", "u_txx", ... using the axis names of a field.
inline std::string derivative_label(const MultiIndex& idx, const std::vector<Axis>& axes) {
    std::string s = "u";
    if (idx.is_zero()) return s;
    s += '_';
    for (std::size_t a = 0; a < axes.size(); ++a)
        for (unsigned k = 0; k < idx.order_along(a); ++k) s += axes[a].name;
    return s;
}

// Inverse of derivative_label; greedy match of axis names after "u_".
inline MultiIndex parse_derivative_label(std::string_view label, const std::vector<Axis>& axes) {
    MultiIndex idx;
    idx.space_orders.assign(axes.empty() ? 0 : axes.size() - 1, 0u);
    if (label == "u") return idx;
    if (label.size() < 3 || label.substr(0, 2) != "u_")
        throw FormatError("not a derivative label: '" + std::string(label) + "'");
    std::string_view rest = label.substr(2);
    while (!rest.empty()) {
        std::size_t best = axes.size();
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& n = axes[a].name;
            if (rest.substr(0, n.size()) == n &&
                (best == axes.size() || n.size() > axes[best].name.size()))
                best = a;
        }
        if (best == axes.size())
            throw FormatError("unknown axis in derivative label '" + std::string(label) + "'");
        if (best == 0)
            ++idx.time_order;
        else
            ++idx.space_orders[best - 1];
        rest.remove_prefix(axes[best].name.size());
    }
    return idx;
}

// Values of u on a regular grid. Axis 0 is time; values are row-major with
// the last axis fastest.
class SampledField {
  public:
    SampledField() = default;

    SampledField(std::vector<Axis> axes, std::vector<double> values, std::string label = "u")
        : axes_(std::move(axes)), values_(std::move(values)), label_(std::move(label)) {
        if (axes_.empty()) throw ValidationError("field needs at least one axis");
        for (const auto& a : axes_) a.validate();
        if (values_.size() != point_count())
            throw ValidationError("value count " + std::to_string(values_.size()) +
                                  " does not match grid size " + std::to_string(point_count()));
    }

    const std::vector<Axis>& axes() const { return axes_; }
    const Axis& axis(std::size_t i) const { return axes_.at(i); }
    std::size_t rank() const { return axes_.size(); }
    std::size_t space_dims() const { return axes_.size() - 1; }
    const std::vector<double>& values() const { return values_; }
    const std::string& label() const { return label_; }

    std::vector<std::size_t> shape() const {
        std::vector<std::size_t> s;
        for (const auto& a : axes_) s.push_back(a.count);
        return s;
    }

    std::size_t point_count() const {
        std::size_t n = 1;
        for (const auto& a : axes_) n *= a.count;
        return n;
    }

    std::size_t stride(std::size_t axis) const {
        std::size_t s = 1;
        for (std::size_t a = axis + 1; a < axes_.size(); ++a) s *= axes_[a].count;
        return s;
    }

    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t a = 0; a < axes_.size(); ++a) f = f * axes_[a].count + idx[a];
        return f;
    }

    std::vector<std::size_t> unflatten(std::size_t flat) const {
        std::vector<std::size_t> idx(axes_.size());
        for (std::size_t a = axes_.size(); a-- > 0;) {
            idx[a] = flat % axes_[a].count;
            flat /= axes_[a].count;
        }
        return idx;
    }

    double at(const std::vector<std::size_t>& idx) const { return values_[flat_index(idx)]; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    void require_finite() const {
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw ValidationError("non-finite value at flat index " + std::to_string(i));
    }

    // Sub-block starting at `offset` with the given counts.
    SampledField crop(const std::vector<std::size_t>& offset, const std::vector<std::size_t>& counts) const {
        std::vector<Axis> ax = axes_;
        std::size_t n = 1;
        for (std::size_t a = 0; a < ax.size(); ++a) {
            if (offset[a] + counts[a] > axes_[a].count) throw ValidationError("crop outside grid");
            ax[a].start = axes_[a].coordinate(offset[a]);
            ax[a].count = counts[a];
            n *= counts[a];
        }
        std::vector<double> v;
        v.reserve(n);
        std::vector<std::size_t> idx(ax.size(), 0);
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<std::size_t> src(idx);
            for (std::size_t a = 0; a < ax.size(); ++a) src[a] += offset[a];
            v.push_back(at(src));
            for (std::size_t a = ax.size(); a-- > 0;) {
                if (++idx[a] < counts[a]) break;
                idx[a] = 0;
            }
        }
        return SampledField(std::move(ax), std::move(v), label_);
    }

    friend bool operator==(const SampledField& a, const SampledField& b) {
        return a.axes_ == b.axes_ && a.label_ == b.label_ && a.values_ == b.values_;
    }

  private:
    std::vector<Axis> axes_;
    std::vector<double> values_;
    std::string label_ = "u";
};

// Builds a field by evaluating fn(coordinates) at every grid point.
template <class Fn>
SampledField tabulate(std::vector<Axis> axes, Fn&& fn, std::string label = "u") {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    std::vector<double> v;
    v.reserve(n);
    std::vector<std::size_t> idx(axes.size(), 0);
    std::vector<double> coord(axes.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t a = 0; a < axes.size(); ++a) coord[a] = axes[a].coordinate(idx[a]);
        v.push_back(fn(static_cast<const std::vector<double>&>(coord)));
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++idx[a] < axes[a].count) break;
            idx[a] = 0;
        }
    }
    return SampledField(std::move(axes), std::move(v), std::move(label));
}

namespace detail {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = s.find(sep, pos);
        out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline double parse_real(std::string_view s, const char* what) {
    std::string tmp(trim(s));
    if (tmp.empty()) throw FormatError(std::string("empty ") + what);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || errno == ERANGE)
        throw FormatError(std::string("bad ") + what + ": '" + tmp + "'");
    return v;
}

inline std::size_t parse_count(std::string_view s, const char* what) {
    std::string tmp(trim(s));
    if (tmp.empty() || tmp.find_first_not_of("0123456789") != std::string::npos)
        throw FormatError(std::string("bad ") + what + ": '" + tmp + "'");
    return static_cast<std::size_t>(std::stoull(tmp));
}

inline Axis parse_axis(std::string_view spec) {
    spec = trim(spec);
    std::size_t colon = spec.find(':');
    if (colon == std::string_view::npos || colon == 0) throw FormatError("bad axis spec '" + std::string(spec) + "'");
    std::string name(trim(spec.substr(0, colon)));
    std::string_view rest = trim(spec.substr(colon + 1));
    if (!rest.empty() && rest.front() == '[') {
        if (rest.back() != ']') throw FormatError("unterminated coordinate list for axis '" + name + "'");
        std::istringstream in(std::string(rest.substr(1, rest.size() - 2)));
        std::vector<double> c;
        std::string tok;
        while (in >> tok) c.push_back(parse_real(tok, "coordinate"));
        if (c.size() < 2) throw FormatError("axis '" + name + "' needs at least two coordinates");
        double step = (c.back() - c.front()) / static_cast<double>(c.size() - 1);
        if (!(step > 0)) throw NonUniformGridError("axis '" + name + "' coordinates are not increasing");
        for (std::size_t i = 1; i < c.size(); ++i) {
            double d = c[i] - c[i - 1];
            if (std::abs(d - step) > 1e-12 * std::abs(step))
                throw NonUniformGridError("axis '" + name + "' spacing " + format_real(d) +
                                          " at index " + std::to_string(i) + " differs from " + format_real(step));
        }
        Axis a{name, c.front(), step, c.size()};
        a.validate();
        return a;
    }
    auto parts = split(rest, ':');
    if (parts.size() != 3) throw FormatError("axis '" + name + "' must be name:start:step:count");
    Axis a{name, parse_real(parts[0], "axis start"), parse_real(parts[1], "axis step"),
           parse_count(parts[2], "axis count")};
    if (!(a.step > 0)) throw NonUniformGridError("axis '" + name + "' step must be positive");
    try {
        a.validate();
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
    return a;
}

}  // namespace detail

inline SampledField ingest_csv_stream(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("missing axes header");
    constexpr std::string_view kAxes = "# axes:";
    if (std::string_view(line).substr(0, kAxes.size()) != kAxes) throw FormatError("first line must start with '# axes:'");
    std::vector<Axis> axes;
    for (auto part : detail::split(std::string_view(line).substr(kAxes.size()), ','))
        axes.push_back(detail::parse_axis(part));
    if (!std::getline(in, line)) throw FormatError("missing label header");
    constexpr std::string_view kLabel = "# label:";
    if (std::string_view(line).substr(0, kLabel.size()) != kLabel) throw FormatError("second line must start with '# label:'");
    std::string_view lab = std::string_view(line).substr(kLabel.size());
    if (!lab.empty() && lab.front() == ' ') lab.remove_prefix(1);
    if (!lab.empty() && lab.back() == '\r') lab.remove_suffix(1);
    std::string label(lab);

    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    std::vector<double> values(n, 0.0);
    std::vector<char> seen(n, 0);
    std::size_t filled = 0, lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line, ',');
        if (cells.size() != axes.size() + 1)
            throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(axes.size() + 1) + " cells");
        std::size_t flat = 0;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            std::size_t i = detail::parse_count(cells[a], "grid index");
            if (i >= axes[a].count) throw FormatError("line " + std::to_string(lineno) + ": index out of range");
            flat = flat * axes[a].count + i;
        }
        if (seen[flat]) throw FormatError("line " + std::to_string(lineno) + ": duplicate grid point");
        double v = detail::parse_real(cells.back(), "value");
        if (!std::isfinite(v)) throw ValidationError("line " + std::to_string(lineno) + ": non-finite value");
        values[flat] = v;
        seen[flat] = 1;
        ++filled;
    }
    if (filled != n)
        throw IncompleteGridError("grid has " + std::to_string(n) + " points but only " + std::to_string(filled) + " rows");
    return SampledField(std::move(axes), std::move(values), std::move(label));
}

inline SampledField ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return ingest_csv_stream(in);
}

inline void export_csv_stream(const SampledField& field, std::ostream& out) {
    field.require_finite();
    out << "# axes: ";
    for (std::size_t a = 0; a < field.rank(); ++a) {
        const auto& ax = field.axis(a);
        if (a) out << ", ";
        out << ax.name << ':' << detail::format_real(ax.start) << ':' << detail::format_real(ax.step) << ':' << ax.count;
    }
    out << "\n# label: " << field.label() << '\n';
    const auto& v = field.values();
    std::vector<std::size_t> idx(field.rank(), 0);
    std::string row;
    for (std::size_t k = 0; k < v.size(); ++k) {
        row.clear();
        for (std::size_t a = 0; a < idx.size(); ++a) {
            row += std::to_string(idx[a]);
            row += ',';
        }
        row += detail::format_real(v[k]);
        row += '\n';
        out << row;
        for (std::size_t a = idx.size(); a-- > 0;) {
            if (++idx[a] < field.axis(a).count) break;
            idx[a] = 0;
        }
    }
}

inline void export_csv(const SampledField& field, const std::string& path) {
    field.require_finite();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    export_csv_stream(field, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace uniqcert
