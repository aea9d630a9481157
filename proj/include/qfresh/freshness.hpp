#pragma once

#include <string>
#include <utility>

#include "qfresh/ctmc.hpp"
#include "qfresh/estimators.hpp"

namespace qfresh {

// Spectral routes need a reversible chain; General works for any chain.
enum class Route { Auto, Spectral, General };

double mbf_martingale(const Chain& chain, double mu);
double mbf_exponential(const Chain& chain, double mu, double lambda, Route route = Route::Auto);
double mbf_erlang(const Chain& chain, double mu, int gamma, double lambda, Route route = Route::Auto);
double mbf_tau_map(const Chain& chain, double mu, double tau, Route route = Route::Auto);
double mbf_pmap(const Chain& chain, double mu, const PMapSchedule& schedule, Route route = Route::Auto);

// Expected fresh time between queries given last sample i, for estimators
// whose trajectory between queries is deterministic.
double expected_fresh_time(const Chain& chain, const EstimatorSpec& spec, int i, double mu,
                           Route route = Route::Auto);

double mbf_general(const Chain& chain, const EstimatorSpec& spec, double mu, Route route = Route::Auto);

// Row i of  int_lo^hi P(t) e^{-mu t} dt  (hi may be +inf).
Vector discounted_occupancy(const Chain& chain, int i, double lo, double hi, double mu,
                            Route route = Route::Auto);

// Adaptive Simpson on the uniformized row, the general-chain route above.
Vector discounted_occupancy_quadrature(const Chain& chain, int i, double lo, double hi, double mu);

// (martingale MBF, tau*-MAP MBF).
std::pair<double, double> verify_martingale_vs_taustar(const Chain& chain, double mu);

struct FreshnessReport {
    double mbf = 0.0;
    std::string method;  // "closed" or "general"
};

// Dispatch to the cheapest exact path for a fixed sampling rate.
FreshnessReport evaluate_mbf(const Chain& chain, const EstimatorSpec& spec, double mu);

}  // namespace qfresh
