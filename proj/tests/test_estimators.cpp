#include <gtest/gtest.h>

#include "qfresh/error.hpp"
#include "qfresh/estimators.hpp"
#include "qfresh/presets.hpp"

using namespace qfresh;

TEST(Schedule, StagesAreHalfOpen) {
    PMapSchedule s = two_stage_schedule(3, 2.0, 1);
    EXPECT_EQ(s.stage_of(0, 0.0), 0);
    EXPECT_EQ(s.stage_of(0, 1.999), 0);
    EXPECT_EQ(s.stage_of(0, 2.0), 1);
    EXPECT_EQ(s.value_at(0, 2.0), 1);
    EXPECT_EQ(s.value_at(2, 1e9), 1);
    EXPECT_EQ(s.value_at(2, 0.5), 2);
}

TEST(Schedule, ThresholdValidation) {
    EXPECT_NO_THROW(validate_thresholds({{0.0, kInf}, {0.0, 1.0, kInf}}, 2));
    EXPECT_THROW(validate_thresholds({{0.0, kInf}}, 2), Error);
    EXPECT_THROW(validate_thresholds({{0.5, kInf}, {0.0, kInf}}, 2), Error);
    EXPECT_THROW(validate_thresholds({{0.0, 2.0, 1.0, kInf}, {0.0, kInf}}, 2), Error);
    EXPECT_THROW(validate_thresholds({{0.0, 3.0}, {0.0, kInf}}, 2), Error);
}

TEST(Schedule, MapPointsReproduceMapValues) {
    Chain c = preset_chain("fig6a");
    MapStructure m = map_structure(c, suggested_map_horizon(c));
    for (double mu : {0.1, 1.0, 10.0}) {
        PMapSchedule s = pmap_schedule(c, mu, map_thresholds(m));
        for (int i = 0; i < c.size(); ++i) {
            ASSERT_EQ(s.stage_count(i), static_cast<int>(m.map_value[i].size()));
            for (int k = 0; k < s.stage_count(i); ++k) EXPECT_EQ(s.gamma[i][k], m.map_value[i][k]);
        }
    }
    PMapSchedule direct = pmap_from_map(c, m);
    EXPECT_EQ(direct.gamma, pmap_schedule(c, 0.3, map_thresholds(m)).gamma);
}

TEST(Schedule, TruncatedThresholds) {
    Chain c = preset_chain("fig6a");
    MapStructure m = map_structure(c, suggested_map_horizon(c));
    auto th = map_thresholds(m, 1);
    EXPECT_EQ(th[2].size(), 3u);  // 0, first change, inf
    EXPECT_EQ(th[0].size(), 2u);
    EXPECT_EQ(th[2].back(), kInf);
}

TEST(Estimate, Evaluation) {
    EXPECT_EQ(evaluate_estimate(Martingale{}, 3, 1, 1e9), 1);
    EXPECT_EQ(evaluate_estimate(TauMap{2.0}, 3, 1, 2.0), 1);
    EXPECT_EQ(evaluate_estimate(TauMap{2.0}, 3, 1, 2.0001), 3);
    EXPECT_EQ(evaluate_estimate(Exponential{1.0}, 3, 1, 0.0, 1), 1);
    EXPECT_EQ(evaluate_estimate(Exponential{1.0}, 3, 1, 0.0, 2), 3);
    EXPECT_EQ(evaluate_estimate(Erlang{4, 1.0}, 3, 1, 0.0, 3), 1);
    EXPECT_EQ(evaluate_estimate(Erlang{4, 1.0}, 3, 1, 0.0, 4), 3);
    try {
        evaluate_estimate(Erlang{4, 1.0}, 3, 1, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingAuxStage);
    }
}

TEST(Estimate, SpecValidation) {
    EXPECT_NO_THROW(validate(Exponential{0.0}, 3));
    EXPECT_THROW(validate(Exponential{-1.0}, 3), Error);
    EXPECT_THROW(validate(Erlang{1, 1.0}, 3), Error);
    EXPECT_THROW(validate(Erlang{2, 0.0}, 3), Error);
    EXPECT_THROW(validate(TauMap{-1.0}, 3), Error);
    EXPECT_THROW(validate(PMap{two_stage_schedule(2, 1.0, 0)}, 3), Error);
    EXPECT_EQ(estimator_name(PMap{}), "pmap");
    EXPECT_TRUE(is_deterministic(TauMap{1.0}));
    EXPECT_FALSE(is_deterministic(Erlang{}));
}
