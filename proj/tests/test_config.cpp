#include <gtest/gtest.h>

#include <sstream>

#include "qfresh/config.hpp"
#include "qfresh/error.hpp"
#include "qfresh/presets.hpp"

using namespace qfresh;

namespace {

std::string message_of(const std::string& text) {
    try {
        Config cfg = Config::parse(text, "t.ini");
        chain_from_config(cfg);
        estimator_from_config(cfg);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, ChainFromRates) {
    Config cfg = Config::parse("[chain]\nsize = 2\nrates = -1, 1, 2 -2\n");
    Chain c = chain_from_config(cfg);
    EXPECT_NEAR(c.stationary()(0), 2.0 / 3.0, 1e-15);
}

TEST(Config, PresetChain) {
    Config cfg = Config::parse("; comment\n[chain]\npreset = fig9\n");
    EXPECT_EQ(chain_from_config(cfg).generator(), preset_generator("fig9"));
}

TEST(Config, Diagnostics) {
    EXPECT_NE(message_of("[chain]\nsize = 2\nrates = -1 1 2\n").find("chain.rates has 3 entries"), std::string::npos);
    EXPECT_NE(message_of("[chain]\nsize = 2\nrates = -1 x 2 -2\n").find("chain.rates"), std::string::npos);
    EXPECT_NE(message_of("[chain]\npreset = fig6a\n[estimator]\nkind = bogus\n").find("bogus"), std::string::npos);
    EXPECT_NE(message_of("[chain\npreset = fig6a\n").find("t.ini:1"), std::string::npos);
    EXPECT_NE(message_of("[estimator]\nkind = me\n").find("missing [chain]"), std::string::npos);
    EXPECT_THROW(Config::load("/nonexistent/file.ini"), Error);
}

TEST(Config, EstimatorRecipes) {
    Config cfg = Config::parse("[estimator]\nkind = pmap\nthresholds = | 0.5 | 0.4, 2.9 | 4.9\n");
    EstimatorRecipe r = estimator_from_config(cfg);
    ASSERT_TRUE(r.thresholds.has_value());
    ASSERT_EQ(r.thresholds->size(), 4u);
    EXPECT_EQ((*r.thresholds)[2].size(), 4u);
    ChainContext ctx(preset_chain("fig6a"));
    EstimatorSpec spec = ctx.resolve(r, 0.3);
    EXPECT_EQ(std::get<PMap>(spec).schedule.gamma[2], (std::vector<int>{2, 3, 0}));

    EstimatorSpec e = ctx.resolve(estimator_from_kind("erle"), 0.3);
    EXPECT_EQ(std::get<Erlang>(e).gamma, 10);
    EXPECT_NEAR(std::get<Erlang>(e).lambda, 1.0 / ctx.tau_star(), 1e-15);
    EXPECT_NEAR(std::get<TauMap>(ctx.resolve(estimator_from_kind("tmap"), 0.3)).tau, ctx.tau_star(), 1e-15);
}

TEST(Config, PolicyRoundTrip) {
    Vector mu(3);
    mu << 0.1, 1.0 / 3.0, 2.5;
    for (const SamplingPolicy& p :
         {SamplingPolicy{FixedRate{0.7}}, SamplingPolicy{PerState{mu}}, SamplingPolicy{SemiSimple{mu, 1, 0.2, 0.9, 0.123}}}) {
        std::ostringstream os;
        write_policy(os, p);
        SamplingPolicy q = policy_from_config(Config::parse(os.str()), 3);
        EXPECT_EQ(p.index(), q.index());
        EXPECT_EQ(effective_rates(p, 3), effective_rates(q, 3));
    }
    EXPECT_THROW(policy_from_config(Config::parse("[policy]\nkind = per_state\nmu = 1 2\n"), 3), Error);
    EXPECT_THROW(policy_from_config(Config::parse("[policy]\nkind = fixed\nmu = -1\n"), 3), Error);
}

TEST(Config, NumberFormatting) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(parse_number("inf", "x"), kInf);
    EXPECT_THROW(parse_number("1.0abc", "x"), Error);
    EXPECT_THROW(parse_number("nan", "x"), Error);
}
