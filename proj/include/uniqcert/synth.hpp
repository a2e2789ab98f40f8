#pragma once

// Closed-form test functions u(t, x) with exact derivatives. They generate
// fixture datasets and serve as the independent oracle for the
// finite-difference machinery.
//
//   transport_exp  u = exp(x - a t)                       params a
//   linear_growth  u = (x + b t) exp(a t)                 params a, b
//   kdv_soliton    u = c/2 sech^2(sqrt(c)/2 (x - c t - a)) params a, c
//   reciprocal     u = 1 / (t + x)
//   sine_wave      u = sin(x + t)
//   arcsin_sech    u = (x + t) arcsin(sech t), t > 0

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/findiff.hpp"
#include "uniqcert/grid.hpp"

namespace uniqcert {

using Parameters = std::map<std::string, double>;

struct AnalyticCase {
    std::string name;
    Parameters parameters;
    std::vector<std::pair<double, double>> domain;  // (start, end) for t, x
    std::vector<std::size_t> default_counts;
    std::function<double(double, double)> value_fn;
    // Exact derivative; idx must satisfy idx.total_order() <= max_order.
    std::function<double(const MultiIndex&, double, double)> derivative_fn;
    unsigned max_order = MultiIndex::kDefaultMaxOrder;

    double value(double t, double x) const { return value_fn(t, x); }

    double derivative(const MultiIndex& idx, double t, double x) const {
        idx.check_order(max_order);
        for (std::size_t i = 1; i < idx.space_orders.size(); ++i)
            if (idx.space_orders[i] != 0) throw OrderError("case '" + name + "' has a single spatial axis");
        return derivative_fn(idx, t, x);
    }

    std::vector<Axis> axes(const std::vector<std::size_t>& counts) const {
        if (counts.size() != domain.size())
            throw ParameterError("case '" + name + "' needs " + std::to_string(domain.size()) + " axis counts");
        static const char* names[] = {"t", "x"};
        std::vector<Axis> ax;
        for (std::size_t a = 0; a < domain.size(); ++a) {
            if (counts[a] < 2) throw ParameterError("axis counts must be >= 2");
            ax.push_back(make_axis(names[a], domain[a].first, domain[a].second, counts[a]));
        }
        return ax;
    }
};

namespace detail {

// Dense polynomial in one variable, coefficients by ascending power.
struct Poly {
    std::vector<double> c;

    double operator()(double x) const {
        double r = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
        return r;
    }
    Poly derivative() const {
        Poly d;
        for (std::size_t i = 1; i < c.size(); ++i) d.c.push_back(static_cast<double>(i) * c[i]);
        if (d.c.empty()) d.c.push_back(0.0);
        return d;
    }
    Poly operator*(const Poly& o) const {
        Poly r;
        r.c.assign(c.size() + o.c.size() - 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = 0; j < o.c.size(); ++j) r.c[i + j] += c[i] * o.c[j];
        return r;
    }
    Poly operator+(const Poly& o) const {
        Poly r = c.size() >= o.c.size() ? *this : o;
        const Poly& s = c.size() >= o.c.size() ? o : *this;
        for (std::size_t i = 0; i < s.c.size(); ++i) r.c[i] += s.c[i];
        return r;
    }
};

// sech without overflow for large |y|.
inline double sech(double y) {
    double e = std::exp(-std::abs(y));
    return 2.0 * e / (1.0 + e * e);
}

// d^j/dy^j sech^2(y) = sech^2(y) * Q_j(tanh y).
// With D = (1 - T^2) d/dT acting on polynomials in T = tanh y,
// D^j (1 - T^2) = (1 - T^2) * Q_j, so Q_0 = 1 and Q_j = P'_{j-1}.
inline const std::vector<Poly>& sech2_factors() {
    static const std::vector<Poly> q = [] {
        const Poly one_minus_t2{{1.0, 0.0, -1.0}};
        std::vector<Poly> out{Poly{{1.0}}};
        Poly p = one_minus_t2;
        for (int j = 1; j <= 12; ++j) {
            Poly dp = p.derivative();
            out.push_back(dp);
            p = one_minus_t2 * dp;
        }
        return out;
    }();
    return q;
}

// d^j/dt^j sech(t) = sech(t) * R_j(tanh t), R_{j+1} = -T R_j + (1 - T^2) R_j'.
inline const std::vector<Poly>& sech_factors() {
    static const std::vector<Poly> r = [] {
        const Poly minus_t{{0.0, -1.0}};
        const Poly one_minus_t2{{1.0, 0.0, -1.0}};
        std::vector<Poly> out{Poly{{1.0}}};
        for (int j = 1; j <= 12; ++j) {
            const Poly& prev = out.back();
            out.push_back(minus_t * prev + one_minus_t2 * prev.derivative());
        }
        return out;
    }();
    return r;
}

inline double require_param(const Parameters& p, const std::string& key, const std::string& case_name) {
    auto it = p.find(key);
    if (it == p.end()) throw ParameterError("case '" + case_name + "' requires parameter '" + key + "'");
    if (!std::isfinite(it->second)) throw ParameterError("parameter '" + key + "' must be finite");
    return it->second;
}

inline double factorial(unsigned n) {
    double f = 1.0;
    for (unsigned i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace detail

inline const std::vector<std::string>& case_names() {
    static const std::vector<std::string> names{"transport_exp", "linear_growth", "kdv_soliton",
                                                "reciprocal",    "sine_wave",     "arcsin_sech"};
    return names;
}

inline AnalyticCase make_case(const std::string& name, const Parameters& params = {}) {
    using detail::require_param;
    AnalyticCase c;
    c.name = name;
    c.default_counts = {200, 300};

    auto expect_only = [&](std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : params) {
            bool known = false;
            for (const char* key : keys) known = known || k == key;
            if (!known) throw ParameterError("case '" + name + "' has no parameter '" + k + "'");
        }
    };

    if (name == "transport_exp") {
        expect_only({"a"});
        double a = require_param(params, "a", name);
        c.parameters = {{"a", a}};
        c.domain = {{0.0, 10.0}, {0.0, 10.0}};
        c.value_fn = [a](double t, double x) { return std::exp(x - a * t); };
        c.derivative_fn = [a](const MultiIndex& idx, double t, double x) {
            return std::pow(-a, static_cast<int>(idx.time_order)) * std::exp(x - a * t);
        };
    } else if (name == "linear_growth") {
        expect_only({"a", "b"});
        double a = require_param(params, "a", name);
        double b = require_param(params, "b", name);
        c.parameters = {{"a", a}, {"b", b}};
        c.domain = {{0.0, 10.0}, {0.0, 10.0}};
        c.value_fn = [a, b](double t, double x) { return (x + b * t) * std::exp(a * t); };
        c.derivative_fn = [a, b](const MultiIndex& idx, double t, double x) {
            const int n = static_cast<int>(idx.time_order);
            const unsigned k = idx.space_orders.empty() ? 0u : idx.space_orders[0];
            const double e = std::exp(a * t);
            if (k >= 2) return 0.0;
            if (k == 1) return std::pow(a, n) * e;
            double lead = std::pow(a, n) * (x + b * t);
            double tail = n > 0 ? n * b * std::pow(a, n - 1) : 0.0;
            return e * (lead + tail);
        };
    } else if (name == "kdv_soliton") {
        expect_only({"a", "c"});
        double a = require_param(params, "a", name);
        double cc = require_param(params, "c", name);
        if (!(cc > 0)) throw ParameterError("kdv_soliton requires c > 0");
        c.parameters = {{"a", a}, {"c", cc}};
        c.domain = {{0.0, 10.0}, {0.0, 10.0}};
        const double kappa = std::sqrt(cc) / 2.0;
        c.value_fn = [a, cc, kappa](double t, double x) {
            double s = detail::sech(kappa * (x - cc * t - a));
            return cc / 2.0 * s * s;
        };
        c.derivative_fn = [a, cc, kappa](const MultiIndex& idx, double t, double x) {
            // u depends on xi = x - c t - a only: d_t^n d_x^k u = (-c)^n f^(n+k)(xi).
            const unsigned n = idx.time_order;
            const unsigned k = idx.space_orders.empty() ? 0u : idx.space_orders[0];
            const unsigned j = n + k;
            const double y = kappa * (x - cc * t - a);
            const double s = detail::sech(y);
            const double f = cc / 2.0 * s * s * std::pow(kappa, static_cast<int>(j)) *
                             detail::sech2_factors().at(j)(std::tanh(y));
            return std::pow(-cc, static_cast<int>(n)) * f;
        };
    } else if (name == "reciprocal") {
        expect_only({});
        c.domain = {{1.0, 5.0}, {1.0, 5.0}};
        c.value_fn = [](double t, double x) { return 1.0 / (t + x); };
        c.derivative_fn = [](const MultiIndex& idx, double t, double x) {
            const unsigned j = idx.total_order();
            const double sign = (j % 2) ? -1.0 : 1.0;
            return sign * detail::factorial(j) * std::pow(t + x, -static_cast<int>(j + 1));
        };
    } else if (name == "sine_wave") {
        expect_only({});
        c.domain = {{0.0, 5.0}, {0.0, 5.0}};
        c.value_fn = [](double t, double x) { return std::sin(x + t); };
        c.derivative_fn = [](const MultiIndex& idx, double t, double x) {
            const double s = x + t;
            switch (idx.total_order() % 4) {
                case 0: return std::sin(s);
                case 1: return std::cos(s);
                case 2: return -std::sin(s);
                default: return -std::cos(s);
            }
        };
    } else if (name == "arcsin_sech") {
        expect_only({});
        // Restricted to t >= 1 so that u_x = arcsin(sech t) stays away from 0.
        c.domain = {{1.0, 5.0}, {1.0, 5.0}};
        c.value_fn = [](double t, double x) { return (x + t) * std::asin(detail::sech(t)); };
        c.derivative_fn = [](const MultiIndex& idx, double t, double x) {
            if (!(t > 0)) throw DomainError("arcsin_sech derivatives require t > 0");
            // v(t) = arcsin(sech t), v'(t) = -sech t for t > 0.
            auto v = [t](unsigned j) {
                if (j == 0) return std::asin(detail::sech(t));
                return -detail::sech(t) * detail::sech_factors().at(j - 1)(std::tanh(t));
            };
            const unsigned n = idx.time_order;
            const unsigned k = idx.space_orders.empty() ? 0u : idx.space_orders[0];
            if (k >= 2) return 0.0;
            if (k == 1) return v(n);
            // d_t^n [(x + t) v] = (x + t) v^(n) + n v^(n-1)
            return (x + t) * v(n) + (n > 0 ? n * v(n - 1) : 0.0);
        };
    } else {
        throw UnknownCaseError("unknown case '" + name + "'");
    }
    return c;
}

inline SampledField sample(const AnalyticCase& c, const std::vector<std::size_t>& counts) {
    std::string label = c.name;
    for (const auto& [k, v] : c.parameters) label += " " + k + "=" + detail::format_real(v);
    return tabulate(c.axes(counts), [&](const std::vector<double>& p) { return c.value(p[0], p[1]); }, label);
}

inline SampledField sample(const AnalyticCase& c) { return sample(c, c.default_counts); }

inline SampledField exact_derivative_field(const AnalyticCase& c, const MultiIndex& idx,
                                           const std::vector<std::size_t>& counts) {
    idx.check_order(c.max_order);
    MultiIndex id = idx.resized(1);
    return tabulate(c.axes(counts), [&](const std::vector<double>& p) { return c.derivative(id, p[0], p[1]); },
                    derivative_label(id, c.axes(counts)));
}

// Derivatives read from the closed form on the full grid; bypasses finite
// differences entirely (the accuracy order is ignored).
inline DerivativeSource oracle_source(const AnalyticCase& c, const std::vector<std::size_t>& counts) {
    return [c, counts](const MultiIndex& idx, int) {
        return DerivativeField{exact_derivative_field(c, idx, counts), std::vector<std::size_t>(counts.size(), 0)};
    };
}

}  // namespace uniqcert
