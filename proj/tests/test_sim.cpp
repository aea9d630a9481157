#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qfresh/config.hpp"
#include "qfresh/error.hpp"
#include "qfresh/presets.hpp"
#include "qfresh/sim.hpp"

using namespace qfresh;

namespace {

Chain binary(double a, double b) {
    Matrix q(2, 2);
    q << -a, a, b, -b;
    return build_chain(q);
}

SimConfig config(const Chain& c, EstimatorSpec spec, SamplingPolicy policy, double horizon, std::uint64_t seed = 9) {
    SimConfig sc{c, std::move(spec), std::move(policy), horizon};
    sc.seed = seed;
    sc.replications = 4;
    return sc;
}

}  // namespace

TEST(Sim, SymmetricBinaryMartingale) {
    SimResult r = simulate(config(binary(1, 1), Martingale{}, FixedRate{1.0}, 2.5e5));
    EXPECT_LE(std::abs(r.empirical_mbf - 2.0 / 3.0), 3 * r.std_error);
    EXPECT_LE(std::abs(r.empirical_omega - 1.0), 3 * r.omega_std_error);
}

TEST(Sim, VeryFastSampling) {
    Chain c = preset_chain("fig6a");
    SimResult r = simulate(config(c, Martingale{}, FixedRate{1e4 * c.max_exit_rate()}, 200.0));
    EXPECT_GT(r.empirical_mbf, 0.99);
}

TEST(Sim, OccupancyMatchesStationary) {
    Chain c = preset_chain("fig9");
    SimResult r = simulate(config(c, Martingale{}, FixedRate{0.5}, horizon_in_sojourns(c, 1e5)));
    for (int i = 0; i < c.size(); ++i)
        EXPECT_LE(std::abs(r.occupancy(i) - c.stationary()(i)), 3 * r.occupancy_std_error(i)) << i;
}

TEST(Sim, SeedDeterminism) {
    Chain c = preset_chain("fig5");
    SimConfig sc = config(c, Erlang{5, 0.4}, FixedRate{0.3}, 2e4);
    SimResult a = simulate(sc), b = simulate(sc);
    EXPECT_EQ(a.empirical_mbf, b.empirical_mbf);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(a.query_count, b.query_count);
    EXPECT_EQ(a.replication_mbf, b.replication_mbf);
    sc.seed += 1;
    EXPECT_NE(simulate(sc).empirical_mbf, a.empirical_mbf);
}

TEST(Sim, TraceReproducesMbfExactly) {
    ChainContext ctx(preset_chain("fig6a"));
    const std::vector<EstimatorSpec> specs = {
        Martingale{}, Exponential{0.3}, Erlang{4, 0.5}, TauMap{ctx.tau_star()},
        PMap{pmap_schedule(ctx.chain(), 0.3, map_thresholds(ctx.map()))}};
    for (const auto& spec : specs) {
        SimConfig sc = config(ctx.chain(), spec, FixedRate{0.3}, 3e3);
        std::stringstream trace;
        SimResult r = simulate_replication(sc, 2, &trace);
        std::string header;
        std::getline(trace, header);
        EXPECT_EQ(header, "time,event,source,estimate,rate");
        trace.seekg(0);
        EXPECT_EQ(mbf_from_trace(trace), r.empirical_mbf) << estimator_name(spec);
    }
}

TEST(Sim, PerStateAndSemiSimpleRates) {
    Chain c = binary(1, 1);
    Vector mu(2);
    mu << 1.0, 0.0;
    SemiSimple p{mu, 1, 0.1, 10.0, 0.5};
    SimConfig sc = config(c, Martingale{}, p, 2e5);
    SimResult r = simulate(sc);
    auto [mbf, omega] = policy_metrics(c, Martingale{}, p);
    EXPECT_LE(std::abs(r.empirical_mbf - mbf), 3 * r.std_error);
    EXPECT_LE(std::abs(r.empirical_omega - omega), 3 * r.omega_std_error);

    Vector per(2);
    per << 0.3, 2.0;
    SimResult q = simulate(config(c, TauMap{0.4}, PerState{per}, 2e5));
    auto [m2, w2] = policy_metrics(c, TauMap{0.4}, PerState{per});
    EXPECT_LE(std::abs(q.empirical_mbf - m2), 3 * q.std_error);
    EXPECT_LE(std::abs(q.empirical_omega - w2), 3 * q.omega_std_error);
}

TEST(Sim, ErlangTrendTowardTauMap) {
    ChainContext ctx(preset_chain("fig5"));
    double lam = 1.0 / ctx.tau_star();
    double prev = 0.0;
    for (int g : {2, 10, 50}) {
        SimResult r = simulate(config(ctx.chain(), Erlang{g, lam}, FixedRate{0.5}, horizon_in_sojourns(ctx.chain(), 1e5)));
        double closed = mbf_erlang(ctx.chain(), 0.5, g, lam);
        EXPECT_LE(std::abs(r.empirical_mbf - closed), 3 * r.std_error) << g;
        EXPECT_GT(closed, prev);
        prev = closed;
    }
}

TEST(Sweep, DeterministicCsv) {
    EXPECT_EQ(empirical_sweep({}), "index,chain,estimator,empirical_mbf,std_error,empirical_omega,query_count,total_time\n");
    Chain c = preset_chain("fig4");
    std::vector<SimConfig> cfgs;
    for (double mu : {0.2, 0.5, 1.0}) cfgs.push_back(config(c, Martingale{}, FixedRate{mu}, 1e3));
    std::string a = empirical_sweep(cfgs), b = empirical_sweep(cfgs);
    EXPECT_EQ(a, b);
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
}

TEST(Sim, Validation) {
    Chain c = preset_chain("fig4");
    EXPECT_THROW(validate(config(c, Martingale{}, FixedRate{1.0}, -1.0)), Error);
    SimConfig sc = config(c, Martingale{}, FixedRate{1.0}, 10.0);
    sc.replications = 0;
    EXPECT_THROW(validate(sc), Error);
}
