#include <gtest/gtest.h>

#include <random>

#include "qfresh/config.hpp"
#include "qfresh/error.hpp"
#include "qfresh/multisource.hpp"
#include "qfresh/presets.hpp"

using namespace qfresh;

namespace {

SourceSet random_set(std::uint64_t seed, double budget) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(3, 6);
    SourceSet set;
    set.budget = budget;
    set.rho_l = 1e-3;
    set.rho_u = budget;
    for (int i = 0; i < 5; ++i) {
        Chain c = build_chain(random_birth_death(rng, size(rng)));
        set.sources.push_back(Source{c, Martingale{}, (i + 1) / 15.0, "s" + std::to_string(i)});
    }
    return set;
}

}  // namespace

TEST(Projection, BoundedSimplex) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int rep = 0; rep < 50; ++rep) {
        Vector y(6);
        for (int i = 0; i < 6; ++i) y(i) = g(rng);
        Vector x = project_bounded_simplex(y, 3.0, 0.1, 1.5);
        EXPECT_NEAR(x.sum(), 3.0, 1e-10);
        EXPECT_GE(x.minCoeff(), 0.1 - 1e-12);
        EXPECT_LE(x.maxCoeff(), 1.5 + 1e-12);
        EXPECT_LT((project_bounded_simplex(x, 3.0, 0.1, 1.5) - x).cwiseAbs().maxCoeff(), 1e-10);
        // Optimality: no feasible pairwise move gets closer to y.
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (i != j && x(i) < 1.5 - 1e-9 && x(j) > 0.1 + 1e-9) EXPECT_LE(y(i) - x(i), y(j) - x(j) + 1e-8);
    }
}

TEST(Validation, Errors) {
    SourceSet set = random_set(1, 1.0);
    set.sources[0].weight += 0.01;
    EXPECT_THROW(validate(set), Error);
    set = random_set(1, 1.0);
    set.rho_l = 0.3;  // 5 * 0.3 > 1
    try {
        validate(set);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InfeasibleBounds);
    }
}

TEST(Allocation, IdenticalSourcesShareEqually) {
    Chain c = preset_chain("fig6a");
    SourceSet set{{Source{c, Martingale{}, 0.5, "a"}, Source{c, Martingale{}, 0.5, "b"}}, 1.0, 1e-3, 1.0};
    Allocation a = lagrangian_bisection(set);
    EXPECT_NEAR(a.rates(0), a.rates(1), 1e-9);
    EXPECT_LE(a.total, 1.0 + 1e-9);
    EXPECT_FALSE(a.used_fallback);
}

TEST(Allocation, DominatesBenchmarks) {
    for (double budget : {0.5, 1.5, 3.0}) {
        SourceSet set = random_set(2024, budget);
        Allocation a = lagrangian_bisection(set);
        double fw = evaluate_allocation(set, weight_allocation(set)).objective;
        double fu = evaluate_allocation(set, uniform_allocation(set)).objective;
        EXPECT_GE(a.objective, fw);
        EXPECT_GE(a.objective, fu);
        EXPECT_LE(a.total, budget + 1e-9);
        EXPECT_NEAR(a.objective, evaluate_allocation(set, a.rates).objective, 1e-14);
    }
}

TEST(Allocation, TotalRateFallsWithMultiplier) {
    SourceSet set = random_set(7, 2.0);
    std::vector<std::unique_ptr<SourceCurve>> curves;
    ActionGrid grid = ActionGrid::log_spaced(set.rho_l, set.rho_u, 400);
    for (const auto& s : set.sources) curves.push_back(std::make_unique<SourceCurve>(s, grid));
    double prev = kInf;
    for (double theta = 0.0; theta < 0.5; theta += 0.004) {
        double total = 0.0;
        for (const auto& c : curves) total += per_source_maximizer(*c, theta);
        EXPECT_LE(total, prev + 1e-12);
        prev = total;
    }
}

TEST(Allocation, ZeroMultiplierWhenBudgetIsSlack) {
    Chain c = preset_chain("fig4");
    SourceSet set{{Source{c, Martingale{}, 1.0, "a"}}, 5.0, 1e-3, 1.0};
    Allocation a = lagrangian_bisection(set);
    EXPECT_EQ(a.theta, 0.0);
    EXPECT_NEAR(a.rates(0), 1.0, 1e-12);
}

TEST(Gradient, FeasibleAndNoWorseThanStart) {
    SourceSet set = random_set(3, 2.0);
    Vector init = uniform_allocation(set);
    Allocation g = projected_gradient_descent(set, init);
    EXPECT_NEAR(g.rates.sum(), 2.0, 1e-9);
    EXPECT_GE(g.objective, evaluate_allocation(set, init).objective - 1e-12);
}
