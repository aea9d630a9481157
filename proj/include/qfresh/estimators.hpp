#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qfresh/ctmc.hpp"

namespace qfresh {

// Per-state stage table. tau[i] = {0, t1, ..., +inf} (K_i + 1 entries) and
// gamma[i] holds the K_i stage values with gamma[i][0] == i. Stage k covers
// ages in [tau[i][k], tau[i][k+1]).
struct PMapSchedule {
    std::vector<std::vector<double>> tau;
    std::vector<std::vector<int>> gamma;

    int states() const { return static_cast<int>(tau.size()); }
    int stage_count(int i) const { return static_cast<int>(gamma[i].size()); }
    int stage_of(int i, double age) const;
    int value_at(int i, double age) const { return gamma[i][stage_of(i, age)]; }
};

struct Martingale {};
struct Exponential {
    double lambda = 0.0;
};
struct Erlang {
    int gamma = 2;
    double lambda = 0.0;
};
struct TauMap {
    double tau = 0.0;
};
struct PMap {
    PMapSchedule schedule;
};

using EstimatorSpec = std::variant<Martingale, Exponential, Erlang, TauMap, PMap>;

std::string estimator_name(const EstimatorSpec& spec);
bool is_deterministic(const EstimatorSpec& spec);
void validate(const EstimatorSpec& spec, int states);

// Thresholds per state must start at 0, end at +inf and be nondecreasing.
void validate_thresholds(const std::vector<std::vector<double>>& thresholds, int states);

// Stage values maximize the discounted occupancy integral over each stage.
PMapSchedule pmap_schedule(const Chain& chain, double mu,
                           const std::vector<std::vector<double>>& thresholds);

PMapSchedule pmap_from_map(const Chain& chain, const MapStructure& map);

// Threshold lists built from the first `points` MAP change points per state
// (all of them when points < 0).
std::vector<std::vector<double>> map_thresholds(const MapStructure& map, int points = -1);

// Two-stage schedule: last sample on [0, tau), i_star afterwards.
PMapSchedule two_stage_schedule(int states, double tau, int i_star);

// aux_stage: Exponential uses 1 (clock running) / 2 (expired); Erlang uses
// the auxiliary chain position 1..Gamma.
int evaluate_estimate(const EstimatorSpec& spec, int i_star, int last_sample, double age,
                      std::optional<int> aux_stage = std::nullopt);

}  // namespace qfresh
