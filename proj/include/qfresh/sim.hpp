#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qfresh/ctmc.hpp"
#include "qfresh/estimators.hpp"
#include "qfresh/statedep.hpp"

namespace qfresh {

struct SimConfig {
    Chain chain;
    EstimatorSpec estimator;
    SamplingPolicy policy;
    double horizon = 0.0;
    double warmup = -1.0;  // negative: 1% of the horizon
    std::uint64_t seed = 1;
    int replications = 8;
    int batches = 20;  // batch means per replication for the standard errors
};

struct SimResult {
    double empirical_mbf = 0.0;
    double std_error = 0.0;
    double fresh_time = 0.0;
    double total_time = 0.0;
    std::int64_t query_count = 0;
    double empirical_omega = 0.0;
    double omega_std_error = 0.0;
    Vector occupancy;
    Vector occupancy_std_error;
    std::vector<double> replication_mbf;
};

void validate(const SimConfig& config);

// All replications, run concurrently; aggregation is in replication order.
SimResult simulate(const SimConfig& config);

// One replication; when trace is non-null one CSV row per event after the
// warmup is written (header included).
SimResult simulate_replication(const SimConfig& config, int replication, std::ostream* trace = nullptr);

// Recompute the MBF from an event trace written by simulate_replication.
double mbf_from_trace(std::istream& trace);

// Horizon of `sojourns` mean source sojourn times.
double horizon_in_sojourns(const Chain& chain, double sojourns);

std::string empirical_sweep(const std::vector<SimConfig>& configs);

}  // namespace qfresh
