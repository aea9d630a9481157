#pragma once

#include <memory>
#include <vector>

#include "qfresh/ctmc.hpp"
#include "qfresh/estimators.hpp"
#include "qfresh/statedep.hpp"

namespace qfresh {

// Distribution of the source state at the next query when the last sample
// was i and queries arrive at rate mu.
Vector absorption_probs(const Chain& chain, int i, double mu);

struct ActionGrid {
    std::vector<double> rates;  // ascending

    static ActionGrid log_spaced(double lo, double hi, int count);
    // Default grid for a rate budget: [min(1e-3, omega/100), 20 omega].
    static ActionGrid for_budget(double omega, int count = 200);
};

// Budget-independent tables: fresh time and next-sample distribution for
// every (state, action) pair.
class SmdpModel {
public:
    SmdpModel(const Chain& chain, EstimatorSpec spec, ActionGrid grid);

    int states() const { return states_; }
    int actions() const { return static_cast<int>(grid_.rates.size()); }
    double rate(int a) const { return grid_.rates[a]; }
    double fresh(int s, int a) const { return fresh_[s * actions() + a]; }
    const Vector& transition(int s, int a) const { return next_[s * actions() + a]; }
    const Chain& chain() const { return chain_; }
    const EstimatorSpec& estimator() const { return spec_; }
    const ActionGrid& grid() const { return grid_; }

private:
    Chain chain_;
    EstimatorSpec spec_;
    ActionGrid grid_;
    int states_ = 0;
    std::vector<double> fresh_;
    std::vector<Vector> next_;
};

struct SmdpInstance {
    std::shared_ptr<const SmdpModel> model;
    double gamma = 0.0;

    double reward(int s, int a) const { return model->fresh(s, a) - gamma; }
    double sojourn(int a) const { return 1.0 / model->rate(a); }
};

struct PolicySolution {
    SamplingPolicy policy;
    std::vector<int> actions;  // grid index per state (randomized state keeps the lower-rate index)
    double avg_reward = 0.0;
    Vector relative_values;
    double residual = 0.0;
    double mbf = 0.0;
    double omega = 0.0;
    double gamma = 0.0;
    int iterations = 0;
    bool semi_simple = false;
    // (gamma, omega) for every policy-iteration solve of a constrained run.
    std::vector<std::pair<double, double>> trace;
};

struct PolicyIterationOptions {
    int max_iterations = 500;
};

PolicySolution policy_iteration(const SmdpInstance& instance, const PolicyIterationOptions& options = {},
                                const std::vector<int>* initial = nullptr);

// Evaluate a deterministic grid policy (relative values, gain, mbf, omega).
PolicySolution evaluate_policy(const SmdpInstance& instance, const std::vector<int>& actions);

struct ConstrainedOptions {
    double eps1 = 1e-5;
    double eps2 = 1e-3;
    int max_iterations = 500;
};

PolicySolution solve_constrained(const Chain& chain, const EstimatorSpec& spec, double omega_budget,
                                 const ActionGrid& grid, const ConstrainedOptions& options = {});
PolicySolution solve_constrained(std::shared_ptr<const SmdpModel> model, double omega_budget,
                                 const ConstrainedOptions& options = {});

}  // namespace qfresh
