#pragma once

// Decision engine: maps a function-class assumption and the evidence from
// the rank and Jacobian tests to a uniqueness verdict.
//
// Rule tags:
//   linear-independence        linear class; unique iff the inputs are linearly independent
//   monomial-library           polynomial/algebraic class; rank of the degree-p monomial library
//   algebraic-dependence-count more than m+1 algebraic functions of m+1 variables are dependent
//   jacobi-algebraic           algebraic inputs, k <= m+1: full-rank Jacobian somewhere iff independent
//   jacobi-analytic            full-rank Jacobian at one point suffices for analytic uniqueness
//   analytic-feature-span      non-uniqueness within a declared analytic feature span only
//   dense-image                C^p classes: uniqueness needs a dense image, not decidable from samples
//   nonautonomous-linear-ode   u_tt = a(t) u + b(t) u_t is never unique
//   underdetermined-samples    fewer samples than feature columns

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "uniqcert/errors.hpp"
#include "uniqcert/features.hpp"
#include "uniqcert/findiff.hpp"
#include "uniqcert/grid.hpp"
#include "uniqcert/jacobian.hpp"
#include "uniqcert/rank.hpp"

namespace uniqcert {

enum class FunctionClass { Linear, Polynomial, Algebraic, Analytic, SmoothCp };

inline std::string to_string(FunctionClass c) {
    switch (c) {
        case FunctionClass::Linear: return "LINEAR";
        case FunctionClass::Polynomial: return "POLYNOMIAL";
        case FunctionClass::Algebraic: return "ALGEBRAIC";
        case FunctionClass::Analytic: return "ANALYTIC";
        case FunctionClass::SmoothCp: return "SMOOTH_CP";
    }
    return "?";
}

inline FunctionClass parse_function_class(std::string_view s) {
    s = detail::trim(s);
    if (s == "linear") return FunctionClass::Linear;
    if (s == "polynomial") return FunctionClass::Polynomial;
    if (s == "algebraic") return FunctionClass::Algebraic;
    if (s == "analytic") return FunctionClass::Analytic;
    if (s == "smooth" || s == "smooth_cp") return FunctionClass::SmoothCp;
    throw ConfigError("unknown function class '" + std::string(s) +
                      "' (expected linear, polynomial, algebraic, analytic or smooth)");
}

struct FunctionClassAssumption {
    FunctionClass cls = FunctionClass::Linear;
    unsigned degree = 0;  // polynomial / algebraic degree bound p
    bool u_is_algebraic = false;
    // F depends on t through arbitrary coefficient functions (and linearly on
    // the remaining inputs); used with inputs {t, u, u_t}.
    bool time_varying_coefficients = false;
    std::vector<FeatureInput> inputs;
};

enum class Outcome { Unique, NonUnique, Inconclusive, UndecidableFromSamples, NotApplicable };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Unique: return "UNIQUE";
        case Outcome::NonUnique: return "NON_UNIQUE";
        case Outcome::Inconclusive: return "INCONCLUSIVE";
        case Outcome::UndecidableFromSamples: return "UNDECIDABLE_FROM_SAMPLES";
        case Outcome::NotApplicable: return "NOT_APPLICABLE";
    }
    return "?";
}

inline int exit_code(Outcome o) {
    switch (o) {
        case Outcome::Unique: return 0;
        case Outcome::NonUnique: return 10;
        case Outcome::Inconclusive: return 20;
        case Outcome::UndecidableFromSamples: return 30;
        case Outcome::NotApplicable: return 40;
    }
    return 70;
}

struct CertifyConfig {
    // matrix route
    int max_order = 8;
    double slope_threshold = kDefaultSlopeThreshold;
    double floor_threshold = kDefaultFloorThreshold;
    bool normalize = true;
    Boundary boundary = Boundary::OneSided;
    double zero_tolerance = 1e-10;
    // sigma_min <= singular_level * sigma_max at every order also counts as
    // rank deficient (a flat but numerically singular series)
    double singular_level = 1e-10;
    // NON_UNIQUE needs annihilator residual <= annihilator_floor * (largest raw column RMS)
    double annihilator_floor = 1e-4;
    // Jacobian route
    int jrc_d1 = 2;
    int jrc_d2 = 8;
    std::size_t jrc_stride = 1;
    double drop_factor = kDefaultDropFactor;
    double jacobian_floor = kDefaultJacobianFloor;
    // analytic class: library tried when the Jacobian route does not decide
    bool analytic_fallback = true;
    unsigned fallback_degree = 2;
    std::optional<FeatureSpec> fallback_features;

    std::vector<std::pair<std::string, std::string>> as_pairs() const {
        auto r = [](double v) { return detail::format_real(v); };
        return {
            {"max_order", std::to_string(max_order)},
            {"slope_threshold", r(slope_threshold)},
            {"floor_threshold", r(floor_threshold)},
            {"normalize", normalize ? "true" : "false"},
            {"boundary", boundary == Boundary::Trim ? "trim" : "one_sided"},
            {"zero_tolerance", r(zero_tolerance)},
            {"singular_level", r(singular_level)},
            {"annihilator_floor", r(annihilator_floor)},
            {"jrc_d1", std::to_string(jrc_d1)},
            {"jrc_d2", std::to_string(jrc_d2)},
            {"jrc_stride", std::to_string(jrc_stride)},
            {"drop_factor", r(drop_factor)},
            {"jacobian_floor", r(jacobian_floor)},
            {"analytic_fallback", analytic_fallback ? "true" : "false"},
            {"fallback_degree", std::to_string(fallback_degree)},
        };
    }
};

struct UniquenessVerdict {
    Outcome outcome = Outcome::Inconclusive;
    FunctionClassAssumption assumption;
    std::string rule_fired;
    std::string statement;
    std::vector<std::string> qualifiers;
    std::optional<SingularSpectrumSeries> series;
    std::optional<DecayDiagnosis> decay;
    std::optional<JacobianMap> jacobian;
    std::optional<MapClassification> map_class;
    std::optional<Annihilator> annihilator;
    std::optional<double> relative_residual;  // annihilator residual / largest raw column RMS
    std::vector<std::string> feature_labels;
    std::vector<std::pair<std::string, std::string>> thresholds_used;
    std::vector<std::string> notes;
};

namespace detail {

struct MatrixEvidence {
    SingularSpectrumSeries series;
    DecayDiagnosis decay;
    bool singular_everywhere = false;
    Annihilator annihilator;
    double relative_residual = 0.0;
    std::vector<std::string> labels;

    bool rank_deficient() const { return decay.decaying || singular_everywhere; }
};

inline MatrixEvidence matrix_evidence(const SampledField& field, const FeatureSpec& spec, const CertifyConfig& cfg) {
    MatrixEvidence e;
    e.series = sfranco(field, spec, cfg.max_order);
    e.decay = diagnose_decay(e.series, cfg.slope_threshold, cfg.floor_threshold);
    e.singular_everywhere = true;
    for (std::size_t i = 0; i < e.series.sigma_min.size(); ++i)
        if (e.series.sigma_min[i] > cfg.singular_level * e.series.sigma_max[i]) e.singular_everywhere = false;
    const FeatureMatrix m = sfranco_matrix(field, spec, cfg.max_order, e.series.orders.back());
    e.annihilator = annihilator(m);
    const double scale = raw_column_scale(m);
    e.relative_residual = scale > 0 ? e.annihilator.residual / scale : 0.0;
    e.labels = m.labels;
    return e;
}

inline void attach(UniquenessVerdict& v, const MatrixEvidence& e) {
    v.series = e.series;
    v.decay = e.decay;
    v.annihilator = e.annihilator;
    v.relative_residual = e.relative_residual;
    v.feature_labels = e.labels;
    if (e.singular_everywhere && !e.decay.decaying)
        v.notes.push_back("sigma_min is at the singular level at every order (flat but numerically singular)");
}

inline FeatureSpec class_spec(FeatureKind kind, const FunctionClassAssumption& a, const CertifyConfig& cfg,
                              unsigned degree) {
    FeatureSpec s;
    s.kind = kind;
    s.inputs = a.inputs;
    s.degree = degree;
    s.normalize = cfg.normalize;
    s.boundary = cfg.boundary;
    s.zero_tolerance = cfg.zero_tolerance;
    return s;
}

inline bool is_nonautonomous_linear_ode(const FunctionClassAssumption& a, const SampledField& field) {
    if (!a.time_varying_coefficients || a.inputs.size() != 3) return false;
    const MultiIndex u{0, std::vector<unsigned>(field.space_dims(), 0)};
    MultiIndex ut = u;
    ut.time_order = 1;
    bool has_t = false, has_u = false, has_ut = false;
    for (const auto& in : a.inputs) {
        if (const auto* c = std::get_if<Coordinate>(&in)) {
            has_t |= c->axis == 0;
        } else {
            const MultiIndex idx = std::get<MultiIndex>(in).resized(field.space_dims());
            has_u |= idx == u;
            has_ut |= idx == ut;
        }
    }
    return has_t && has_u && has_ut;
}

}  // namespace detail

// Routes the assumption to the applicable criterion. Each verdict names the
// single rule that decided it.
inline UniquenessVerdict certify(const SampledField& field, const FunctionClassAssumption& assumption,
                                 const CertifyConfig& cfg = {}) {
    const auto& a = assumption;
    if (a.inputs.empty()) throw ConfigError("certify needs at least one input");
    for (std::size_t i = 0; i < a.inputs.size(); ++i)
        for (std::size_t j = i + 1; j < a.inputs.size(); ++j)
            if (a.inputs[i] == a.inputs[j]) throw ConfigError("inputs must be pairwise distinct");
    const bool degree_class = a.cls == FunctionClass::Polynomial || a.cls == FunctionClass::Algebraic;
    if (degree_class && a.degree < 1) throw ConfigError(to_string(a.cls) + " class needs a degree bound p >= 1");

    UniquenessVerdict v;
    v.assumption = a;
    v.thresholds_used = cfg.as_pairs();
    const std::size_t k = a.inputs.size();
    const std::size_t ambient = field.rank();

    auto decide = [&v](Outcome o, std::string rule, std::string statement) {
        v.outcome = o;
        v.rule_fired = std::move(rule);
        v.statement = std::move(statement);
        return v;
    };

    if (detail::is_nonautonomous_linear_ode(a, field)) {
        v.qualifiers.push_back("structural");
        return decide(Outcome::NonUnique, "nonautonomous-linear-ode",
                      "F(t, u, u_t) = a(t) u + b(t) u_t is never unique: H(t, y, z) = u_t(t) y - u(t) z annihilates "
                      "(t, u, u_t)");
    }

    if (a.cls == FunctionClass::SmoothCp) {
        return decide(Outcome::UndecidableFromSamples, "dense-image",
                      "uniqueness among C^p functions is equivalent to a density property of the image of g, "
                      "which finitely many samples cannot establish");
    }

    // Matrix route shared by the linear, polynomial, algebraic and analytic classes.
    auto matrix_route = [&](const FeatureSpec& spec, const std::string& rule, const std::string& unique_text,
                            const std::string& non_unique_text, bool unique_allowed) -> UniquenessVerdict {
        const std::size_t cols = expected_column_count(spec);
        std::size_t rows = 1;
        const auto margin = feature_margins(spec, field.rank(), static_cast<unsigned>(even_max_order(cfg.max_order)));
        for (std::size_t ax = 0; ax < field.rank(); ++ax) {
            const std::size_t n = field.axis(ax).count;
            rows *= n > 2 * margin[ax] ? n - 2 * margin[ax] : 0;
        }
        if (rows < cols) {
            v.notes.push_back(std::to_string(rows) + " sample rows for " + std::to_string(cols) + " feature columns");
            return decide(Outcome::NotApplicable, "underdetermined-samples",
                          "fewer samples than feature columns; the rank question is ill-posed");
        }
        const auto e = detail::matrix_evidence(field, spec, cfg);
        detail::attach(v, e);
        if (e.rank_deficient()) {
            if (e.relative_residual <= cfg.annihilator_floor) return decide(Outcome::NonUnique, rule, non_unique_text);
            v.notes.push_back("sigma_min decays but the extracted annihilator residual " +
                              detail::format_real(e.relative_residual) + " exceeds the floor");
            return decide(Outcome::Inconclusive, rule, "rank deficiency suggested but not certified by an annihilator");
        }
        if (!unique_allowed) return decide(Outcome::Inconclusive, rule, unique_text);
        return decide(Outcome::Unique, rule, unique_text);
    };

    auto jacobian_route = [&]() {
        auto map = jrc(field, a.inputs, cfg.jrc_d1, cfg.jrc_d2,
                       cfg.jrc_stride > 1 ? PointSelector::strided(cfg.jrc_stride) : PointSelector::interior());
        const auto cls = classify_map(map, cfg.drop_factor, cfg.jacobian_floor);
        for (const auto& n : map.notes) v.notes.push_back(n);
        v.jacobian = std::move(map);
        v.map_class = cls;
        return cls.kind;
    };

    switch (a.cls) {
        case FunctionClass::Linear:
            return matrix_route(detail::class_spec(FeatureKind::Linear, a, cfg, 1), "linear-independence",
                                "the inputs are linearly independent: F is the unique linear function",
                                "the inputs are linearly dependent: another linear F exists", true);

        case FunctionClass::Polynomial:
        case FunctionClass::Algebraic: {
            const std::string deg = std::to_string(a.degree);
            if (a.cls == FunctionClass::Algebraic)
                v.notes.push_back("polynomial and algebraic classes share annihilators, so they are decided together");
            if (k <= ambient) {
                const MapClass mc = jacobian_route();
                if (mc == MapClass::FullRankSomewhere)
                    return decide(Outcome::Unique, a.u_is_algebraic ? "jacobi-algebraic" : "jacobi-analytic",
                                  "the Jacobian of g has full rank at some point: F is unique (analytic uniqueness "
                                  "implies uniqueness in this smaller class)");
                if (mc == MapClass::NowhereFullRank && a.u_is_algebraic) {
                    v.qualifiers.push_back("numerical-evidence");
                    return decide(Outcome::NonUnique, "jacobi-algebraic",
                                  "the numerical Jacobian of the algebraic inputs is nowhere of full rank: they are "
                                  "algebraically dependent");
                }
                if (mc == MapClass::MixedInconclusive)
                    v.notes.push_back("Jacobian map is mixed; falling through to the monomial library");
            } else if (a.u_is_algebraic) {
                return decide(Outcome::NonUnique, "algebraic-dependence-count",
                              std::to_string(k) + " algebraic functions of " + std::to_string(ambient) +
                                  " variables are algebraically dependent");
            }
            v.qualifiers.push_back("degree <= " + deg);
            return matrix_route(detail::class_spec(FeatureKind::Monomial, a, cfg, a.degree), "monomial-library",
                                "unique among polynomials of degree <= " + deg,
                                "a nonzero polynomial of degree <= " + deg + " annihilates g", true);
        }

        case FunctionClass::Analytic: {
            const bool fallback = cfg.analytic_fallback;
            if (k > ambient && !fallback)
                throw ConfigError("analytic class with k > m+1 needs fallback features: the Jacobian rank is at most m+1");
            if (k <= ambient) {
                const MapClass mc = jacobian_route();
                if (mc == MapClass::FullRankSomewhere)
                    return decide(Outcome::Unique, "jacobi-analytic",
                                  "the Jacobian of g has full rank at some point: F is the unique analytic function");
                if (!fallback)
                    return decide(Outcome::Inconclusive, "jacobi-analytic",
                                  "the Jacobian criterion is only sufficient; no full-rank point was found");
            } else {
                v.notes.push_back("k > m+1: the Jacobian has rank at most m+1, the Jacobian criterion cannot apply");
            }
            FeatureSpec spec = cfg.fallback_features ? *cfg.fallback_features
                                                     : detail::class_spec(FeatureKind::Monomial, a, cfg,
                                                                          cfg.fallback_degree);
            if (cfg.fallback_features) {
                spec.normalize = cfg.normalize;
                spec.boundary = cfg.boundary;
            }
            v.qualifiers.push_back("within declared feature span only");
            return matrix_route(spec, "analytic-feature-span",
                                "no annihilator in the declared feature span; uniqueness in the full analytic class "
                                "is not established",
                                "an analytic annihilator exists within the declared feature span",
                                false);
        }

        case FunctionClass::SmoothCp: break;
    }
    throw ConfigError("unhandled function class");
}

// Structured text report.
inline std::string verdict_report(const UniquenessVerdict& v, const std::vector<Axis>& axes) {
    std::ostringstream s;
    s << "verdict: " << to_string(v.outcome) << "\n";
    s << "class: " << to_string(v.assumption.cls);
    if (v.assumption.degree) s << " (degree <= " << v.assumption.degree << ")";
    s << "\n";
    s << "inputs:";
    for (const auto& in : v.assumption.inputs) s << " " << input_label(in, axes);
    s << "\n";
    s << "rule: " << v.rule_fired << "\n";
    s << "conclusion: " << v.statement << "\n";
    for (const auto& q : v.qualifiers) s << "qualifier: " << q << "\n";
    if (v.series) {
        s << "sigma_min by order:";
        for (std::size_t i = 0; i < v.series->orders.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " %u:%.3e", v.series->orders[i], v.series->sigma_min[i]);
            s << buf;
        }
        s << "\n";
    }
    if (v.decay) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "decay: slope=%.4g final=%.3e decaying=%s\n", v.decay->slope,
                      v.decay->final_sigma, v.decay->decaying ? "true" : "false");
        s << buf;
    }
    if (v.map_class) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "jacobian: %s collapsed=%.4f full_rank=%.4f median_drop=%.3e points=%zu\n",
                      to_string(v.map_class->kind).c_str(), v.map_class->collapsed_fraction,
                      v.map_class->full_rank_fraction, v.map_class->median_drop, v.jacobian->size());
        s << buf;
    }
    if (v.annihilator && v.outcome == Outcome::NonUnique) {
        s << "annihilator: " << render_equation(*v.annihilator) << "\n";
        char buf[96];
        std::snprintf(buf, sizeof buf, "annihilator residual: %.3e (relative %.3e)\n", v.annihilator->residual,
                      v.relative_residual.value_or(0.0));
        s << buf;
    }
    for (const auto& n : v.notes) s << "note: " << n << "\n";
    return s.str();
}

// Machine-readable key=value block.
inline std::string verdict_key_values(const UniquenessVerdict& v, const std::vector<Axis>& axes) {
    std::ostringstream s;
    s << "outcome=" << to_string(v.outcome) << "\n";
    s << "exit_code=" << exit_code(v.outcome) << "\n";
    s << "class=" << to_string(v.assumption.cls) << "\n";
    s << "degree=" << v.assumption.degree << "\n";
    s << "u_is_algebraic=" << (v.assumption.u_is_algebraic ? "true" : "false") << "\n";
    s << "inputs=";
    for (std::size_t i = 0; i < v.assumption.inputs.size(); ++i)
        s << (i ? "," : "") << input_label(v.assumption.inputs[i], axes);
    s << "\n";
    s << "rule_fired=" << v.rule_fired << "\n";
    for (std::size_t i = 0; i < v.qualifiers.size(); ++i) s << "qualifier." << i << "=" << v.qualifiers[i] << "\n";
    if (v.series)
        for (std::size_t i = 0; i < v.series->orders.size(); ++i)
            s << "sigma_min." << v.series->orders[i] << "=" << detail::format_real(v.series->sigma_min[i]) << "\n";
    if (v.decay) {
        s << "decay.slope=" << detail::format_real(v.decay->slope) << "\n";
        s << "decay.decaying=" << (v.decay->decaying ? "true" : "false") << "\n";
    }
    if (v.map_class) {
        s << "jacobian.class=" << to_string(v.map_class->kind) << "\n";
        s << "jacobian.collapsed_fraction=" << detail::format_real(v.map_class->collapsed_fraction) << "\n";
        s << "jacobian.full_rank_fraction=" << detail::format_real(v.map_class->full_rank_fraction) << "\n";
        s << "jacobian.median_drop=" << detail::format_real(v.map_class->median_drop) << "\n";
    }
    if (v.annihilator && v.outcome == Outcome::NonUnique) {
        for (std::size_t i = 0; i < v.annihilator->labels.size(); ++i)
            s << "annihilator." << v.annihilator->labels[i] << "="
              << detail::format_real(v.annihilator->raw_coefficients(static_cast<Eigen::Index>(i))) << "\n";
        s << "annihilator.residual=" << detail::format_real(v.annihilator->residual) << "\n";
    }
    for (const auto& [key, value] : v.thresholds_used) s << "threshold." << key << "=" << value << "\n";
    return s.str();
}

}  // namespace uniqcert
