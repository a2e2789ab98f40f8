#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "uniqcert/verdict.hpp"
#include "uniqcert/synth.hpp"

using namespace uniqcert;

namespace {

MultiIndex mi(unsigned t, unsigned x) { return MultiIndex{t, {x}}; }

FunctionClassAssumption assume(FunctionClass cls, std::vector<FeatureInput> inputs, unsigned degree = 0) {
    FunctionClassAssumption a;
    a.cls = cls;
    a.inputs = std::move(inputs);
    a.degree = degree;
    return a;
}

const SampledField& transport() {
    static const SampledField f = sample(make_case("transport_exp", {{"a", 3}}));
    return f;
}

const SampledField& growth() {
    static const SampledField f = sample(make_case("linear_growth", {{"a", 1}, {"b", 2}}));
    return f;
}

const SampledField& kdv() {
    static const SampledField f = sample(make_case("kdv_soliton", {{"a", 0}, {"c", 1}}));
    return f;
}

}  // namespace

TEST(Verdict, ExitCodes) {
    EXPECT_EQ(exit_code(Outcome::Unique), 0);
    EXPECT_EQ(exit_code(Outcome::NonUnique), 10);
    EXPECT_EQ(exit_code(Outcome::Inconclusive), 20);
    EXPECT_EQ(exit_code(Outcome::UndecidableFromSamples), 30);
    EXPECT_EQ(exit_code(Outcome::NotApplicable), 40);
    EXPECT_EQ(to_string(Outcome::UndecidableFromSamples), "UNDECIDABLE_FROM_SAMPLES");
    EXPECT_EQ(parse_function_class("smooth"), FunctionClass::SmoothCp);
    EXPECT_THROW(parse_function_class("rational"), ConfigError);
}

TEST(Verdict, TransportIsLinearlyNonUnique) {
    UniquenessVerdict v = certify(transport(), assume(FunctionClass::Linear, {mi(0, 0), mi(0, 1)}));
    EXPECT_EQ(v.outcome, Outcome::NonUnique);
    EXPECT_EQ(v.rule_fired, "linear-independence");
    ASSERT_TRUE(v.annihilator.has_value());
    EXPECT_NEAR(*coefficient_of(*v.annihilator, "u") / *coefficient_of(*v.annihilator, "u_x"), -1.0, 1e-4);
    ASSERT_TRUE(v.relative_residual.has_value());
    EXPECT_LE(*v.relative_residual, 1e-4);
}

TEST(Verdict, LinearGrowthIsLinearlyUnique) {
    UniquenessVerdict v = certify(growth(), assume(FunctionClass::Linear, {mi(0, 0), mi(0, 1)}));
    EXPECT_EQ(v.outcome, Outcome::Unique);
    ASSERT_TRUE(v.decay.has_value());
    EXPECT_FALSE(v.decay->decaying);
}

TEST(Verdict, KdvIsPolynomiallyNonUnique) {
    UniquenessVerdict v =
        certify(kdv(), assume(FunctionClass::Polynomial, {mi(0, 0), mi(0, 1), mi(0, 2), mi(0, 3)}, 2));
    EXPECT_EQ(v.outcome, Outcome::NonUnique);
    EXPECT_EQ(v.rule_fired, "monomial-library");
    EXPECT_NE(std::find(v.qualifiers.begin(), v.qualifiers.end(), "degree <= 2"), v.qualifiers.end());
}

TEST(Verdict, SmoothClassIsUndecidable) {
    UniquenessVerdict v = certify(growth(), assume(FunctionClass::SmoothCp, {mi(0, 0), mi(0, 1)}));
    EXPECT_EQ(v.outcome, Outcome::UndecidableFromSamples);
    EXPECT_EQ(v.rule_fired, "dense-image");
    EXPECT_EQ(exit_code(v.outcome), 30);
}

TEST(Verdict, AlgebraicCountRuleWhenTooManyInputs) {
    FunctionClassAssumption a = assume(FunctionClass::Algebraic, {mi(0, 0), mi(0, 1), mi(0, 2), mi(0, 3)}, 2);
    a.u_is_algebraic = true;
    UniquenessVerdict v = certify(kdv(), a);
    EXPECT_EQ(v.outcome, Outcome::NonUnique);
    EXPECT_EQ(v.rule_fired, "algebraic-dependence-count");
}

TEST(Verdict, NonautonomousLinearOdeIsStructurallyNonUnique) {
    SampledField f = tabulate({make_axis("t", 0.0, 2.0, 50)}, [](const std::vector<double>& p) { return std::exp(-p[0]); });
    FunctionClassAssumption a = assume(FunctionClass::Linear, {Coordinate{0}, MultiIndex{0, {}}, MultiIndex{1, {}}});
    a.time_varying_coefficients = true;
    UniquenessVerdict v = certify(f, a);
    EXPECT_EQ(v.outcome, Outcome::NonUnique);
    EXPECT_EQ(v.rule_fired, "nonautonomous-linear-ode");
    EXPECT_NE(std::find(v.qualifiers.begin(), v.qualifiers.end(), "structural"), v.qualifiers.end());
}

TEST(Verdict, TooFewSamplesIsNotApplicable) {
    SampledField f = tabulate({make_axis("t", 0.0, 1.0, 9)}, [](const std::vector<double>& p) { return std::exp(p[0]); });
    // 10 monomials of degree <= 3 in (u, u_t), 9 rows
    UniquenessVerdict v = certify(f, assume(FunctionClass::Polynomial, {MultiIndex{0, {}}, MultiIndex{1, {}}}, 3));
    EXPECT_EQ(v.outcome, Outcome::NotApplicable);
    EXPECT_EQ(v.rule_fired, "underdetermined-samples");
}

TEST(Verdict, ConfigurationErrors) {
    EXPECT_THROW(certify(growth(), assume(FunctionClass::Linear, {})), ConfigError);
    EXPECT_THROW(certify(growth(), assume(FunctionClass::Linear, {mi(0, 1), mi(0, 1)})), ConfigError);
    EXPECT_THROW(certify(growth(), assume(FunctionClass::Polynomial, {mi(0, 0), mi(0, 1)})), ConfigError);
    CertifyConfig no_fallback;
    no_fallback.analytic_fallback = false;
    EXPECT_THROW(certify(growth(), assume(FunctionClass::Analytic, {mi(0, 0), mi(0, 1), mi(0, 2)}), no_fallback),
                 ConfigError);
}

// A verdict for a class constrains the verdicts for the classes around it:
// non-uniqueness is inherited by every larger class and uniqueness by every
// smaller one.
TEST(VerdictProperty, MonotoneAcrossNestedClasses) {
    struct Item {
        const SampledField* field;
        std::vector<FeatureInput> inputs;
    };
    const SampledField sine = sample(make_case("sine_wave"), {60, 60});
    const SampledField recip = sample(make_case("reciprocal"), {60, 60});
    const SampledField growth2 = sample(make_case("linear_growth", {{"a", 2}, {"b", 2}}), {80, 80});
    const std::vector<Item> items{{&transport(), {mi(0, 0), mi(0, 1)}}, {&growth(), {mi(0, 0), mi(0, 1)}},
                                  {&sine, {mi(0, 0), mi(0, 1)}},        {&recip, {mi(0, 0), mi(0, 1)}},
                                  {&growth2, {mi(0, 0), mi(0, 1)}}};
    for (const auto& it : items) {
        std::vector<Outcome> seq{certify(*it.field, assume(FunctionClass::Linear, it.inputs)).outcome,
                                 certify(*it.field, assume(FunctionClass::Polynomial, it.inputs, 2)).outcome,
                                 certify(*it.field, assume(FunctionClass::Analytic, it.inputs)).outcome,
                                 certify(*it.field, assume(FunctionClass::SmoothCp, it.inputs)).outcome};
        for (std::size_t small = 0; small < seq.size(); ++small)
            for (std::size_t large = small + 1; large < seq.size(); ++large) {
                EXPECT_FALSE(seq[small] == Outcome::NonUnique && seq[large] == Outcome::Unique)
                    << it.field->label() << " classes " << small << " < " << large;
            }
    }
}

TEST(Verdict, AnalyticUniquenessThroughTheJacobian) {
    SampledField f = sample(make_case("linear_growth", {{"a", 2}, {"b", 2}}));
    UniquenessVerdict v = certify(f, assume(FunctionClass::Analytic, {mi(0, 0), mi(0, 1)}));
    EXPECT_EQ(v.outcome, Outcome::Unique);
    EXPECT_EQ(v.rule_fired, "jacobi-analytic");
    ASSERT_TRUE(v.map_class.has_value());
    EXPECT_EQ(v.map_class->kind, MapClass::FullRankSomewhere);
}

TEST(Verdict, AnalyticNonUniquenessOnlyWithinFeatureSpan) {
    SampledField f = sample(make_case("sine_wave"), {80, 80});
    UniquenessVerdict v = certify(f, assume(FunctionClass::Analytic, {mi(0, 0), mi(0, 1)}));
    EXPECT_EQ(v.outcome, Outcome::NonUnique);
    EXPECT_EQ(v.rule_fired, "analytic-feature-span");
    EXPECT_NE(std::find(v.qualifiers.begin(), v.qualifiers.end(), "within declared feature span only"),
              v.qualifiers.end());
    CertifyConfig cfg;
    cfg.analytic_fallback = false;
    EXPECT_EQ(certify(f, assume(FunctionClass::Analytic, {mi(0, 0), mi(0, 1)}), cfg).outcome, Outcome::Inconclusive);
}

TEST(Verdict, DeterministicAcrossThreadCounts) {
    const auto a = assume(FunctionClass::Polynomial, {mi(0, 0), mi(0, 1), mi(0, 2), mi(0, 3)}, 2);
    const char* old = std::getenv("UNIQCERT_THREADS");
    const std::string saved = old ? old : "";
    setenv("UNIQCERT_THREADS", "1", 1);
    const std::string one = verdict_key_values(certify(kdv(), a), kdv().axes());
    setenv("UNIQCERT_THREADS", "7", 1);
    const std::string seven = verdict_key_values(certify(kdv(), a), kdv().axes());
    if (old) setenv("UNIQCERT_THREADS", saved.c_str(), 1);
    else unsetenv("UNIQCERT_THREADS");
    EXPECT_EQ(one, seven);
    EXPECT_NE(one.find("outcome=NON_UNIQUE"), std::string::npos);
}

TEST(Verdict, ReportNamesTheRule) {
    UniquenessVerdict v = certify(transport(), assume(FunctionClass::Linear, {mi(0, 0), mi(0, 1)}));
    const std::string report = verdict_report(v, transport().axes());
    EXPECT_NE(report.find("NON_UNIQUE"), std::string::npos);
    EXPECT_NE(report.find("linear-independence"), std::string::npos);
    const std::string kv = verdict_key_values(v, transport().axes());
    EXPECT_NE(kv.find("exit_code=10"), std::string::npos);
}
