#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qfresh/config.hpp"
#include "qfresh/error.hpp"
#include "qfresh/freshness.hpp"
#include "qfresh/presets.hpp"

using namespace qfresh;

namespace {

Chain binary(double a, double b) {
    Matrix q(2, 2);
    q << -a, a, b, -b;
    return build_chain(q);
}

Matrix resolvent(const Chain& c, double mu) {
    const int n = c.size();
    return (mu * Matrix::Identity(n, n) - c.generator()).inverse();
}

}  // namespace

TEST(Martingale, SymmetricBinary) {
    // mu * (1/2 (1/mu + 1/(mu + 2))) at mu = 1.
    EXPECT_NEAR(mbf_martingale(binary(1, 1), 1.0), 2.0 / 3.0, 1e-14);
}

TEST(Martingale, MatchesResolventTrace) {
    for (const auto& name : preset_names()) {
        Chain c = preset_chain(name);
        for (double mu : {0.1, 1.0, 5.0}) {
            Matrix r = resolvent(c, mu);
            double expect = 0.0;
            for (int i = 0; i < c.size(); ++i) expect += c.stationary()(i) * r(i, i);
            EXPECT_NEAR(mbf_martingale(c, mu), mu * expect, 1e-12) << name;
        }
    }
}

TEST(Martingale, Limits) {
    Chain c = preset_chain("fig9");
    EXPECT_GT(mbf_martingale(c, 1e6), 0.99999);
    EXPECT_NEAR(mbf_martingale(c, 1e-9), c.stationary().squaredNorm(), 1e-8);
    EXPECT_THROW(mbf_martingale(c, 0.0), Error);
}

TEST(Quadrature, ResolventOracle) {
    // The full discounted occupancy is the resolvent row, an independent linear solve.
    for (const char* name : {"ring4", "fig6a", "fig5"}) {
        Chain c = preset_chain(name);
        for (double mu : {0.05, 0.3, 2.0}) {
            Matrix r = resolvent(c, mu);
            for (int i = 0; i < c.size(); ++i)
                EXPECT_LT((discounted_occupancy_quadrature(c, i, 0.0, kInf, mu) - r.row(i).transpose())
                              .cwiseAbs()
                              .maxCoeff(),
                          1e-9)
                    << name << " mu=" << mu;
        }
    }
}

TEST(Quadrature, IntervalsViaResolventIdentity) {
    // int_lo^hi P(t) e^{-mu t} dt = (P(lo) e^{-mu lo} - P(hi) e^{-mu hi}) R(mu).
    Chain c = preset_chain("ring4");
    for (double mu : {0.1, 1.0}) {
        Matrix r = resolvent(c, mu);
        for (auto [lo, hi] : {std::pair{0.0, 0.5}, {0.3, 4.0}, {2.0, 31.0}}) {
            Matrix lhs = transition_matrix(c, lo) * std::exp(-mu * lo) - transition_matrix(c, hi) * std::exp(-mu * hi);
            Matrix expect = lhs * r;
            for (int i = 0; i < 4; ++i)
                EXPECT_LT((discounted_occupancy_quadrature(c, i, lo, hi, mu) - expect.row(i).transpose())
                              .cwiseAbs()
                              .maxCoeff(),
                          1e-10);
        }
    }
}

TEST(Routes, GeneralMatchesSpectral) {
    for (const char* name : {"fig5", "fig6a", "fig9"}) {
        ChainContext ctx(preset_chain(name));
        const Chain& c = ctx.chain();
        for (double mu : {0.1, 0.5, 2.0}) {
            double ts = ctx.tau_star();
            EXPECT_NEAR(mbf_tau_map(c, mu, ts, Route::General), mbf_tau_map(c, mu, ts, Route::Spectral), 1e-9);
            PMapSchedule s = pmap_schedule(c, mu, map_thresholds(ctx.map()));
            EXPECT_NEAR(mbf_pmap(c, mu, s, Route::General), mbf_pmap(c, mu, s, Route::Spectral), 1e-9);
            EXPECT_NEAR(mbf_exponential(c, mu, 0.7, Route::General), mbf_exponential(c, mu, 0.7, Route::Spectral),
                        1e-10);
            EXPECT_NEAR(mbf_erlang(c, mu, 10, 0.7, Route::General), mbf_erlang(c, mu, 10, 0.7, Route::Spectral),
                        1e-10);
        }
    }
}

TEST(Routes, SpectralNeedsReversibleChain) {
    Chain ring = preset_chain("ring4");
    EXPECT_THROW(mbf_tau_map(ring, 0.3, 1.0, Route::Spectral), Error);
    EXPECT_NO_THROW(mbf_tau_map(ring, 0.3, 1.0));
}

TEST(Fig6a, FrozenValues) {
    ChainContext ctx(preset_chain("fig6a"));
    const double mu = 0.3;
    EXPECT_NEAR(mbf_martingale(ctx.chain(), mu), 0.5348527753809448, 1e-12);
    EXPECT_NEAR(mbf_tau_map(ctx.chain(), mu, ctx.tau_star()), 0.5633667113963176, 1e-10);
    EXPECT_NEAR(mbf_pmap(ctx.chain(), mu, pmap_schedule(ctx.chain(), mu, map_thresholds(ctx.map()))),
                0.6184204563132154, 1e-10);
}

TEST(Ring, FrozenSchedules) {
    Chain c = preset_chain("ring4");
    MapStructure m = map_structure(c, 36.0);
    auto v = [&](int k) { return mbf_pmap(c, 0.3, pmap_schedule(c, 0.3, map_thresholds(m, k))); };
    EXPECT_NEAR(v(1), 0.41720, 5e-6);
    EXPECT_NEAR(v(2), 0.41811, 5e-6);
    EXPECT_NEAR(v(4), 0.418124, 5e-7);
}

TEST(Properties, RandomizedEstimatorIdentities) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int rep = 0; rep < 30; ++rep) {
        Chain c = build_chain(random_birth_death(rng, 3 + rep % 4));
        double mu = u(rng), lam = u(rng);
        EXPECT_NEAR(mbf_exponential(c, mu, 0.0), mbf_martingale(c, mu), 1e-12);
        EXPECT_NEAR(mbf_erlang(c, mu, 2, lam / 2), mbf_exponential(c, mu, lam), 1e-12);
        double pi_max = c.stationary().maxCoeff();
        EXPECT_NEAR(mbf_tau_map(c, mu, 0.0), pi_max, 1e-12);
        EXPECT_NEAR(mbf_tau_map(c, mu, kInf), mbf_martingale(c, mu), 1e-12);
        // Large switch rates move every estimator toward the stationary guess.
        EXPECT_NEAR(mbf_exponential(c, mu, 1e9), pi_max, 1e-6);
        for (double v : {mbf_exponential(c, mu, lam), mbf_erlang(c, mu, 7, lam)}) {
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
    }
}

TEST(Properties, MartingaleBelowTauStarMap) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 5.0);
    int checked = 0;
    while (checked < 40) {
        Chain c = build_chain(random_birth_death(rng, 4));
        if (!c.unique_max()) continue;
        ++checked;
        auto [me, tm] = verify_martingale_vs_taustar(c, u(rng));
        EXPECT_LE(me, tm + 1e-10);
    }
    EXPECT_THROW(verify_martingale_vs_taustar(binary(1, 1), 1.0), Error);
}

TEST(Properties, ExpectedFreshTimeBounds) {
    Chain c = preset_chain("fig6b");
    for (int i = 0; i < c.size(); ++i)
        for (double mu : {0.2, 2.0}) {
            double f = expected_fresh_time(c, TauMap{1.5}, i, mu);
            EXPECT_GT(f, 0.0);
            EXPECT_LT(f, 1.0 / mu);
        }
    EXPECT_THROW(expected_fresh_time(c, Erlang{3, 1.0}, 0, 1.0), Error);
}

TEST(Evaluate, MethodLabels) {
    EXPECT_EQ(evaluate_mbf(preset_chain("ring4"), TauMap{1.0}, 0.3).method, "general");
    EXPECT_EQ(evaluate_mbf(preset_chain("fig4"), TauMap{1.0}, 0.3).method, "general");
    EXPECT_EQ(evaluate_mbf(preset_chain("fig5"), TauMap{1.0}, 0.3).method, "closed");
    EXPECT_EQ(evaluate_mbf(preset_chain("ring4"), Martingale{}, 0.3).method, "closed");
}
