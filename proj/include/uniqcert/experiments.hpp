#pragma once

// The six canned reproduction pipelines. Each returns its output files (name
// to content) and named pass/fail checks; the CLI writes the files and the
// acceptance suite reads the checks.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/features.hpp"
#include "uniqcert/jacobian.hpp"
#include "uniqcert/rank.hpp"
#include "uniqcert/svg.hpp"
#include "uniqcert/synth.hpp"
#include "uniqcert/verdict.hpp"

namespace uniqcert {

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentResult {
    std::string id;
    std::string title;
    std::map<std::string, std::string> files;
    std::vector<Check> checks;
    std::vector<std::string> info;  // measurements that are reported but not checked

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline MultiIndex dx(unsigned k) { return MultiIndex{0, {k}}; }

inline FeatureSpec linear_spec(std::vector<FeatureInput> inputs) {
    FeatureSpec s;
    s.kind = FeatureKind::Linear;
    s.inputs = std::move(inputs);
    return s;
}

inline FeatureSpec monomial_spec(std::vector<FeatureInput> inputs, unsigned degree) {
    FeatureSpec s;
    s.kind = FeatureKind::Monomial;
    s.inputs = std::move(inputs);
    s.degree = degree;
    return s;
}

inline double series_drop(const SingularSpectrumSeries& s) {
    return s.sigma_min.back() > 0 ? s.sigma_min.front() / s.sigma_min.back() : std::numeric_limits<double>::infinity();
}

inline double series_variation(const SingularSpectrumSeries& s) {
    double lo = s.sigma_min.front(), hi = lo;
    for (double v : s.sigma_min) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

inline std::string series_text(const SingularSpectrumSeries& s) {
    std::string out;
    for (std::size_t i = 0; i < s.orders.size(); ++i)
        out += (i ? " " : "") + std::to_string(s.orders[i]) + ":" + sci(s.sigma_min[i]);
    return out;
}

// Per-label coefficients of `a` scaled by `scale`, compared with `target`
// (labels absent from target must vanish). Returns the largest error.
inline double max_coefficient_error(const Annihilator& a, double scale, const std::map<std::string, double>& target,
                                    std::string* worst = nullptr) {
    double err = 0.0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const auto it = target.find(a.labels[i]);
        const double want = it == target.end() ? 0.0 : it->second;
        const double e = std::abs(scale * a.raw_coefficients(static_cast<Eigen::Index>(i)) - want);
        if (e > err) {
            err = e;
            if (worst) *worst = a.labels[i];
        }
    }
    return err;
}

// RMS of sum_j c_j * column_j over the rows of an (un-normalized) matrix.
inline double rms_residual(const FeatureMatrix& m, const Eigen::VectorXd& c) {
    return (m.raw * c).norm() / std::sqrt(static_cast<double>(m.rows()));
}

inline Eigen::VectorXd coefficients_for(const std::vector<std::string>& labels, const std::map<std::string, double>& t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (auto it = t.find(labels[i]); it != t.end()) c(static_cast<Eigen::Index>(i)) = it->second;
    return c;
}

inline void add_series_files(ExperimentResult& r, const std::string& stem, const SingularSpectrumSeries& s,
                             const std::string& title) {
    r.files[stem + ".csv"] = series_csv(s);
    r.files[stem + ".svg"] = svg::series_plot(s, title);
}

inline void add_map_files(ExperimentResult& r, const std::string& stem, const JacobianMap& m, const std::string& title) {
    r.files[stem + ".csv"] = heatmap_csv(m);
    r.files[stem + ".svg"] = svg::heatmap(m, title);
}

inline void add_verdict_file(ExperimentResult& r, const std::string& stem, const UniquenessVerdict& v,
                             const std::vector<Axis>& axes) {
    r.files[stem + ".txt"] = verdict_report(v, axes) + "\n" + verdict_key_values(v, axes);
}

inline Check check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

}  // namespace detail

// exp(x - 3t): the naive single-order test sees full rank, S-FRanCo sees the
// exponential decay of u - u_x.
inline ExperimentResult experiment_transport() {
    using namespace detail;
    ExperimentResult r{"5.1.1", "exp(x - 3t): linear non-uniqueness", {}, {}, {}};
    const auto c = make_case("transport_exp", {{"a", 3.0}});
    const auto f = sample(c);
    const std::vector<FeatureInput> in{dx(0), dx(1)};

    FeatureSpec raw = linear_spec(in);
    raw.normalize = false;
    const double raw_sigma = sigma_min(build(f, raw, 2));
    r.checks.push_back(check("raw sigma_min at accuracy 2 in [1, 100]", raw_sigma >= 1 && raw_sigma <= 100,
                             "sigma_min = " + sci(raw_sigma)));
    r.info.push_back("single-order test with delta = 1 reports unique: " +
                     std::string(franco(build(f, raw, 2), 1.0) ? "true" : "false"));

    const auto s = sfranco(f, linear_spec(in), 8);
    const auto d = diagnose_decay(s);
    add_series_files(r, "sfranco_linear", s, "exp(x-3t), linear features (u, u_x)");
    r.checks.push_back(check("S-FRanCo diagnoses decay", d.decaying,
                             "slope = " + sci(d.slope) + ", series " + series_text(s)));
    r.checks.push_back(check("end-to-end sigma_min drop >= 1e4", series_drop(s) >= 1e4, "drop = " + sci(series_drop(s))));

    FunctionClassAssumption a{FunctionClass::Linear, 0, false, false, in};
    const auto v = certify(f, a);
    add_verdict_file(r, "verdict", v, f.axes());
    r.checks.push_back(check("verdict NON_UNIQUE", v.outcome == Outcome::NonUnique, to_string(v.outcome)));
    if (v.annihilator) {
        r.files["annihilator.csv"] = annihilator_csv(*v.annihilator);
        const double cu = *coefficient_of(*v.annihilator, "u"), cux = *coefficient_of(*v.annihilator, "u_x");
        r.checks.push_back(check("annihilator proportional to u - u_x", std::abs(cu + cux) <= 1e-3 * std::abs(cu),
                                 render_equation(*v.annihilator)));
    }
    return r;
}

// (x + 2t) e^t: linear features (u, u_x) stay independent; adding u_xx
// (identically zero) makes the linear PDE non-unique.
inline ExperimentResult experiment_linear_growth() {
    using namespace detail;
    ExperimentResult r{"5.1.2", "(x + 2t) e^t: linear uniqueness", {}, {}, {}};
    const auto c = make_case("linear_growth", {{"a", 1.0}, {"b", 2.0}});
    const auto f = sample(c);
    const auto s = sfranco(f, linear_spec({dx(0), dx(1)}), 8);
    const auto d = diagnose_decay(s);
    add_series_files(r, "sfranco_linear", s, "(x+2t)e^t, linear features (u, u_x)");
    r.checks.push_back(check("no decay for (u, u_x)", !d.decaying, "slope = " + sci(d.slope) + ", series " + series_text(s)));
    r.checks.push_back(check("sigma_min variation < 1e2", series_variation(s) < 1e2,
                             "max/min = " + sci(series_variation(s))));

    FunctionClassAssumption a{FunctionClass::Linear, 0, false, false, {dx(0), dx(1), dx(2)}};
    const auto v = certify(f, a);
    add_verdict_file(r, "verdict_with_uxx", v, f.axes());
    if (v.series) add_series_files(r, "sfranco_linear_with_uxx", *v.series, "(x+2t)e^t, linear features (u, u_x, u_xx)");
    r.checks.push_back(check("adding u_xx gives NON_UNIQUE", v.outcome == Outcome::NonUnique, to_string(v.outcome)));
    const double mass = v.annihilator ? coefficient_mass(v.annihilator->raw_coefficients, v.annihilator->labels, {"u_xx"}) : 0;
    r.checks.push_back(check("annihilator mass on u_xx >= 99%", mass >= 0.99, "mass = " + sci(mass)));
    return r;
}

// KdV soliton (a = 0, c = 1): unique linear PDE; the degree-2 monomial
// library is rank deficient.
inline ExperimentResult experiment_kdv() {
    using namespace detail;
    ExperimentResult r{"5.2.1", "KdV soliton: polynomial non-uniqueness", {}, {}, {}};
    const auto c = make_case("kdv_soliton", {{"a", 0.0}, {"c", 1.0}});
    const auto f = sample(c);
    const std::vector<FeatureInput> in{dx(0), dx(1), dx(2), dx(3)};

    const auto sl = sfranco(f, linear_spec(in), 8);
    const auto dl = diagnose_decay(sl);
    add_series_files(r, "sfranco_linear", sl, "KdV soliton, linear features (u, u_x, u_xx, u_xxx)");
    r.checks.push_back(check("linear library: no decay", !dl.decaying, "series " + series_text(sl)));

    const auto spec = monomial_spec(in, 2);
    const auto sm = sfranco(f, spec, 8);
    const auto dm = diagnose_decay(sm);
    add_series_files(r, "sfranco_monomial", sm, "KdV soliton, monomials up to degree 2");
    r.checks.push_back(check("monomial library: decay diagnosed", dm.decaying,
                             "slope = " + sci(dm.slope) + ", series " + series_text(sm)));

    const FeatureMatrix m = sfranco_matrix(f, spec, 8, 8);
    const Annihilator ann = annihilator(m);
    r.files["annihilator.csv"] = annihilator_csv(ann);
    r.info.push_back("extracted annihilator: " + render_equation(ann));
    r.info.push_back("numerical null space dimension (sigma <= 1e-6 sigma_max): " +
                     std::to_string(numerical_nullity(m, 1e-6)));

    const std::map<std::string, double> expected{{"u*u_x", 6.0}, {"u_xxx", -1.0}, {"u_x", 1.0}};
    const auto cuux = coefficient_of(ann, "u*u_x");
    const double scale = cuux && std::abs(*cuux) > 0 ? 6.0 / *cuux : 0.0;
    std::string worst;
    const double err = max_coefficient_error(ann, scale, expected, &worst);
    r.checks.push_back(check("annihilator matches 6uu_x - u_xxx + u_x (per coefficient <= 5e-2)", err <= 5e-2,
                             "max error " + sci(err) + " at " + worst + "; extracted " + render_equation(ann)));

    FeatureSpec oracle_spec = spec;
    oracle_spec.normalize = false;
    const FeatureMatrix om = build_from_source(f.axes(), oracle_source(c, c.default_counts), oracle_spec, 8,
                                               std::vector<std::size_t>(f.rank(), 0));
    const double rms = rms_residual(om, scale * ann.raw_coefficients);
    r.checks.push_back(check("rescaled annihilator RMS residual on exact derivatives <= 1e-3", rms <= 1e-3,
                             "rms = " + sci(rms)));

    const double stated = rms_residual(om, coefficients_for(om.labels, expected));
    const std::map<std::string, double> solved{{"u*u_x", 6.0}, {"u_xxx", 1.0}, {"u_x", -1.0}};
    const double actual = rms_residual(om, coefficients_for(om.labels, solved));
    r.info.push_back("RMS of 6uu_x - u_xxx + u_x on exact derivatives: " + sci(stated));
    r.info.push_back("RMS of 6uu_x + u_xxx - u_x on exact derivatives: " + sci(actual));
    return r;
}

// 1/(t + x): the Jacobian of (u, u_x) collapses everywhere as the order
// increases.
inline ExperimentResult experiment_reciprocal() {
    using namespace detail;
    ExperimentResult r{"5.2.2", "1/(t + x): Jacobian nowhere of full rank", {}, {}, {}};
    const auto c = make_case("reciprocal");
    const auto f = sample(c);
    const auto m = jrc(f, {dx(0), dx(1)}, 2, 7);
    for (const auto& n : m.notes) r.info.push_back(n);
    const auto cls = classify_map(m);
    add_map_files(r, "jrc_heatmap", m, "1/(t+x): smallest singular value of the Jacobian of (u, u_x)");
    const double lo = median(m.sigma_min_low), hi = median(m.sigma_min_high);
    const double drop = hi > 0 ? lo / hi : std::numeric_limits<double>::infinity();
    r.checks.push_back(check("median sigma_min drop >= 1e5", drop >= 1e5,
                             "median " + sci(lo) + " -> " + sci(hi) + " (factor " + sci(drop) + ")"));
    r.checks.push_back(check("classification NOWHERE_FULL_RANK", cls.kind == MapClass::NowhereFullRank,
                             to_string(cls.kind)));
    return r;
}

// sin(x + t): Jacobian nowhere of full rank; the degree-2 library with a
// constant finds u^2 + u_x^2 - 1.
inline ExperimentResult experiment_sine() {
    using namespace detail;
    ExperimentResult r{"5.3.1", "sin(x + t): analytic non-uniqueness", {}, {}, {}};
    const auto c = make_case("sine_wave");
    const auto f = sample(c);
    const auto m = jrc(f, {dx(0), dx(1)}, 2, 7);
    const auto cls = classify_map(m);
    add_map_files(r, "jrc_heatmap", m, "sin(x+t): smallest singular value of the Jacobian of (u, u_x)");
    r.checks.push_back(check("JRC classification NOWHERE_FULL_RANK", cls.kind == MapClass::NowhereFullRank,
                             to_string(cls.kind)));

    const auto spec = monomial_spec({dx(0), dx(1)}, 2);
    const auto s = sfranco(f, spec, 8);
    const auto d = diagnose_decay(s);
    add_series_files(r, "sfranco_monomial", s, "sin(x+t), monomials up to degree 2 with constant");
    r.checks.push_back(check("monomial library with constant: decay", d.decaying,
                             "slope = " + sci(d.slope) + ", series " + series_text(s)));
    const Annihilator ann = annihilator(sfranco_matrix(f, spec, 8, 8));
    r.files["annihilator.csv"] = annihilator_csv(ann);
    const auto cu2 = coefficient_of(ann, "u^2");
    const double scale = cu2 && std::abs(*cu2) > 0 ? 1.0 / *cu2 : 0.0;
    std::string worst;
    const double err = max_coefficient_error(ann, scale, {{"u^2", 1.0}, {"u_x^2", 1.0}, {"1", -1.0}}, &worst);
    r.checks.push_back(check("annihilator matches u^2 + u_x^2 - 1 (per coefficient <= 1e-2)", err <= 1e-2,
                             "max error " + sci(err) + " at " + worst + "; " + render_equation(ann)));
    return r;
}

// (x + 2t) e^{2t} and (x + t) arcsin(sech t): the Jacobian has full rank,
// so the analytic PDE is unique.
inline ExperimentResult experiment_analytic_unique() {
    using namespace detail;
    ExperimentResult r{"5.3.2", "analytic uniqueness via the Jacobian", {}, {}, {}};
    const std::vector<std::pair<std::string, AnalyticCase>> cases{
        {"linear_growth", make_case("linear_growth", {{"a", 2.0}, {"b", 2.0}})},
        {"arcsin_sech", make_case("arcsin_sech")}};
    for (const auto& [stem, c] : cases) {
        const auto f = sample(c);
        const auto m = jrc(f, {dx(0), dx(1)}, 2, 7);
        const auto cls = classify_map(m);
        add_map_files(r, "jrc_heatmap_" + stem, m, f.label() + ": smallest singular value of the Jacobian of (u, u_x)");
        std::size_t full = 0;
        for (std::size_t p = 0; p < m.size(); ++p)
            if (!point_collapsed(m, p, kDefaultDropFactor, kDefaultJacobianFloor)) ++full;
        const double frac = static_cast<double>(full) / static_cast<double>(m.size());
        r.checks.push_back(check(stem + ": JRC FULL_RANK_SOMEWHERE at >= 95% of points",
                                 cls.kind == MapClass::FullRankSomewhere && frac >= 0.95,
                                 to_string(cls.kind) + ", full rank (not collapsed) at " + sci(frac) +
                                     ", well conditioned at " + sci(cls.full_rank_fraction)));
        FunctionClassAssumption a{FunctionClass::Analytic, 0, false, false, {dx(0), dx(1)}};
        const auto v = certify(f, a);
        add_verdict_file(r, "verdict_" + stem, v, f.axes());
        r.checks.push_back(check(stem + ": certify analytic is UNIQUE", v.outcome == Outcome::Unique,
                                 to_string(v.outcome) + " via " + v.rule_fired));
    }
    return r;
}

inline const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"5.1.1", "5.1.2", "5.2.1", "5.2.2", "5.3.1", "5.3.2"};
    return ids;
}

inline ExperimentResult run_experiment(const std::string& id) {
    if (id == "5.1.1") return experiment_transport();
    if (id == "5.1.2") return experiment_linear_growth();
    if (id == "5.2.1") return experiment_kdv();
    if (id == "5.2.2") return experiment_reciprocal();
    if (id == "5.3.1" || id == "5.3.1b") return experiment_sine();
    if (id == "5.3.2") return experiment_analytic_unique();
    throw UnknownCaseError("unknown experiment id '" + id + "' (expected one of 5.1.1, 5.1.2, 5.2.1, 5.2.2, 5.3.1, 5.3.2)");
}

inline std::string checks_text(const ExperimentResult& r) {
    std::string out = "experiment " + r.id + ": " + r.title + "\n";
    for (const auto& c : r.checks) out += std::string(c.passed ? "PASS " : "FAIL ") + c.name + " | " + c.detail + "\n";
    for (const auto& i : r.info) out += "info " + i + "\n";
    out += std::string("result ") + (r.passed() ? "PASS" : "FAIL") + "\n";
    return out;
}

}  // namespace uniqcert
