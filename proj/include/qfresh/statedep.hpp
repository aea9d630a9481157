#pragma once

#include <variant>

#include "qfresh/ctmc.hpp"
#include "qfresh/estimators.hpp"
#include "qfresh/freshness.hpp"

namespace qfresh {

struct FixedRate {
    double mu = 0.0;
};
struct PerState {
    Vector mu;
};
// State r draws mu_r1 with probability p (else mu_r2) on every visit;
// mu(r) itself is ignored.
struct SemiSimple {
    Vector mu;
    int r = 0;
    double mu_r1 = 0.0;
    double mu_r2 = 0.0;
    double p = 0.0;
};

using SamplingPolicy = std::variant<FixedRate, PerState, SemiSimple>;

void validate(const SamplingPolicy& policy, int states);

// Per-state rate vector; the randomized state gets p*mu_r1 + (1-p)*mu_r2.
Vector effective_rates(const SamplingPolicy& policy, int states);

struct JointStationary {
    Matrix psi;       // psi(i, j): source in i, martingale estimate j
    Vector pi_tilde;  // occupancy of the estimate
    double omega = 0.0;
};

// Row-major layout over (source, estimate) pairs: index i * S + j.
Matrix build_joint_generator(const Chain& chain, const Vector& rates);
JointStationary joint_stationary(const Chain& chain, const Vector& rates);

// Deterministic estimators only. Auto: martingale via the joint chain,
// structured estimators via spectral closed forms when reversible.
// Spectral forces the closed forms; General assembles per-state fresh times.
double mbf_statedep(const Chain& chain, const EstimatorSpec& spec, const Vector& rates,
                    Route route = Route::Auto);

struct SspMetrics {
    double mbf = 0.0;
    double omega = 0.0;
    // Closed-form expressions evaluated on the averaged rate vector.
    double displayed_mbf = 0.0;
    double displayed_omega = 0.0;
};

// Exact renewal-reward metrics over the embedded chain of sampled states.
SspMetrics ssp_metrics(const Chain& chain, const EstimatorSpec& spec, const SemiSimple& policy);

// Analytic (mbf, omega) of any sampling policy under a deterministic estimator.
std::pair<double, double> policy_metrics(const Chain& chain, const EstimatorSpec& spec,
                                         const SamplingPolicy& policy);

}  // namespace qfresh
