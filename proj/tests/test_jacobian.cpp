#include <gtest/gtest.h>

#include <cmath>

#include "uniqcert/jacobian.hpp"
#include "uniqcert/synth.hpp"

using namespace uniqcert;

namespace {

MultiIndex mi(unsigned t, unsigned x) { return MultiIndex{t, {x}}; }

const std::vector<FeatureInput> kUUx{mi(0, 0), mi(0, 1)};

}  // namespace

TEST(Jacobian, SigmaRangeExamples) {
    Eigen::MatrixXd j(2, 2);
    j << 3, 0, 0, 4;
    auto [lo, hi] = jacobian_sigma_range(j);
    EXPECT_DOUBLE_EQ(lo, 3.0);
    EXPECT_DOUBLE_EQ(hi, 4.0);
    j << 1, 2, 2, 4;
    EXPECT_LE(jacobian_sigma_range(j).first, 1e-15);
    Eigen::MatrixXd tall(3, 2);
    tall << 1, 0, 0, 1, 1, 1;
    EXPECT_EQ(jacobian_sigma_range(tall).first, 0.0);
}

TEST(Jacobian, OrderValidation) {
    std::vector<std::string> notes;
    EXPECT_EQ(jrc_orders(2, 7, &notes), (std::pair<unsigned, unsigned>{2, 8}));
    EXPECT_EQ(notes.size(), 1u);
    EXPECT_THROW(jrc_orders(3, 8), OrderError);
    EXPECT_THROW(jrc_orders(8, 8), OrderError);
    EXPECT_THROW(jrc_orders(2, 12), OrderError);
}

TEST(Jacobian, HighOrderEntriesMatchClosedForm) {
    const std::vector<AnalyticCase> cases{make_case("transport_exp", {{"a", 3}}),
                                          make_case("linear_growth", {{"a", 1}, {"b", 2}}),
                                          make_case("kdv_soliton", {{"a", 0}, {"c", 1}}),
                                          make_case("reciprocal"),
                                          make_case("sine_wave"),
                                          make_case("arcsin_sech")};
    for (const auto& c : cases) {
        SampledField f = sample(c);
        JacobianMap m = jrc(f, kUUx, 2, 8, PointSelector::strided(11));
        ASSERT_GT(m.size(), 100u);
        double worst = 0.0;
        for (std::size_t p = 0; p < m.size(); ++p) {
            const double t = m.points[p][0], x = m.points[p][1];
            Eigen::MatrixXd want(2, 2);
            want << c.derivative(mi(1, 0), t, x), c.derivative(mi(0, 1), t, x), c.derivative(mi(1, 1), t, x),
                c.derivative(mi(0, 2), t, x);
            const double scale = want.cwiseAbs().maxCoeff();
            worst = std::max(worst, (m.jacobian(p, true) - want).cwiseAbs().maxCoeff() / scale);
        }
        EXPECT_LE(worst, 1e-6) << c.name;
    }
}

TEST(Jacobian, CoordinateInputsGiveUnitRows) {
    SampledField f = sample(make_case("sine_wave"), {30, 30});
    JacobianMap m = jrc(f, {Coordinate{0}, mi(0, 0)}, 2, 4, PointSelector::explicit_points({{10, 12}}));
    const Eigen::MatrixXd j = m.jacobian(0, true);
    EXPECT_EQ(j(0, 0), 1.0);
    EXPECT_EQ(j(0, 1), 0.0);
    EXPECT_NEAR(j(1, 1), std::cos(m.points[0][0] + m.points[0][1]), 1e-4);
}

TEST(Jacobian, SineCollapsesEverywhere) {
    SampledField f = sample(make_case("sine_wave"));
    JacobianMap m = jrc(f, kUUx, 2, 8, PointSelector::strided(5));
    for (std::size_t p = 0; p < m.size(); ++p) EXPECT_LE(m.sigma_min_high[p], 1e-8 * m.sigma_max_high[p]);
    EXPECT_EQ(classify_map(m).kind, MapClass::NowhereFullRank);
}

TEST(Jacobian, ReciprocalDropsBetweenOrders) {
    SampledField f = sample(make_case("reciprocal"));
    JacobianMap m = jrc(f, kUUx, 2, 8, PointSelector::strided(3));
    MapClassification c = classify_map(m);
    EXPECT_EQ(c.kind, MapClass::NowhereFullRank);
    EXPECT_GE(median(m.sigma_min_low) / median(m.sigma_min_high), 1e5);
}

TEST(Jacobian, LinearGrowthIsFullRank) {
    SampledField f = sample(make_case("linear_growth", {{"a", 2}, {"b", 3}}));
    JacobianMap m = jrc(f, kUUx, 2, 8, PointSelector::strided(4));
    MapClassification c = classify_map(m);
    EXPECT_EQ(c.kind, MapClass::FullRankSomewhere);
    EXPECT_EQ(c.collapsed_fraction, 0.0);
}

TEST(Jacobian, ClassificationIsMonotoneInThresholds) {
    SampledField f = sample(make_case("arcsin_sech"), {60, 60});
    JacobianMap m = jrc(f, kUUx, 2, 6);
    double prev = 1.0;
    for (double drop : {1e0, 1e1, 1e2, 1e3, 1e6}) {
        const double frac = classify_map(m, drop, 0.0).collapsed_fraction;
        EXPECT_LE(frac, prev);
        prev = frac;
    }
    prev = 0.0;
    for (double floor : {0.0, 1e-12, 1e-6, 1e-2, 1.0}) {
        const double frac = classify_map(m, 1e3, floor).collapsed_fraction;
        EXPECT_GE(frac, prev);
        prev = frac;
    }
    EXPECT_EQ(classify_map(m, 1e3, 1.0).kind, MapClass::NowhereFullRank);
}

TEST(Jacobian, TooManyInputsNeverFullRank) {
    SampledField f = sample(make_case("linear_growth", {{"a", 2}, {"b", 3}}), {40, 40});
    JacobianMap m = jrc(f, {mi(0, 0), mi(0, 1), mi(1, 0)}, 2, 4, PointSelector::strided(3));
    EXPECT_EQ(m.sigma_min_high.front(), 0.0);
    EXPECT_NE(classify_map(m).kind, MapClass::FullRankSomewhere);
}

TEST(Jacobian, Selectors) {
    SampledField f = sample(make_case("sine_wave"), {40, 50});
    JacobianMap all = jrc(f, kUUx, 2, 4);
    // u_x at accuracy 4 re-differentiated at accuracy 4 needs 2 + 2 points each side in x
    EXPECT_EQ(all.point_indices.front(), (std::vector<std::size_t>{2, 4}));
    JacobianMap strided = jrc(f, kUUx, 2, 4, PointSelector::strided(5));
    EXPECT_EQ(strided.point_indices[1][1], all.point_indices[5][1]);
    EXPECT_LT(strided.size(), all.size() / 20);
    EXPECT_THROW(jrc(f, kUUx, 2, 4, PointSelector::strided(0)), SelectorError);
    EXPECT_THROW(jrc(f, kUUx, 2, 4, PointSelector::explicit_points({{0, 0}})), SelectorError);
    EXPECT_THROW(jrc(f, kUUx, 2, 4, PointSelector::explicit_points({})), SelectorError);
    EXPECT_THROW(jrc(f, kUUx, 2, 4, PointSelector::explicit_points({{10}})), SelectorError);
    EXPECT_THROW(jrc(f, {mi(0, 0), mi(0, 0)}, 2, 4), ConfigError);
    EXPECT_THROW(jrc(f, {}, 2, 4), ConfigError);
    EXPECT_THROW(jrc(sample(make_case("sine_wave"), {6, 6}), kUUx, 2, 8), GridTooSmallError);
}

TEST(Jacobian, HeatmapCsvLayout) {
    SampledField f = sample(make_case("reciprocal"), {20, 20});
    JacobianMap m = jrc(f, kUUx, 2, 4, PointSelector::explicit_points({{5, 6}, {7, 8}}));
    const std::string csv = heatmap_csv(m);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,sigma_low,sigma_high,ratio");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
