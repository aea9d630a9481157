#include "qfresh/estimators.hpp"

#include <algorithm>
#include <sstream>

#include "qfresh/error.hpp"
#include "qfresh/freshness.hpp"

namespace qfresh {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

int PMapSchedule::stage_of(int i, double age) const {
    const auto& t = tau[i];
    // t[0] = 0 <= age; find the last k with t[k] <= age.
    auto it = std::upper_bound(t.begin(), t.end(), age);
    int k = static_cast<int>(it - t.begin()) - 1;
    return std::clamp(k, 0, stage_count(i) - 1);
}

std::string estimator_name(const EstimatorSpec& spec) {
    return std::visit(overloaded{
                          [](const Martingale&) { return std::string("me"); },
                          [](const Exponential&) { return std::string("expe"); },
                          [](const Erlang&) { return std::string("erle"); },
                          [](const TauMap&) { return std::string("tmap"); },
                          [](const PMap&) { return std::string("pmap"); },
                      },
                      spec);
}

bool is_deterministic(const EstimatorSpec& spec) {
    return std::holds_alternative<Martingale>(spec) || std::holds_alternative<TauMap>(spec) ||
           std::holds_alternative<PMap>(spec);
}

void validate_thresholds(const std::vector<std::vector<double>>& thresholds, int states) {
    if (static_cast<int>(thresholds.size()) != states)
        throw Error(Errc::InvalidThresholds, "need one threshold list per state");
    for (int i = 0; i < states; ++i) {
        const auto& t = thresholds[i];
        std::ostringstream os;
        os << "state " << i << ": ";
        if (t.size() < 2 || t.front() != 0.0 || t.back() != kInf) {
            os << "list must start at 0 and end at inf";
            throw Error(Errc::InvalidThresholds, os.str());
        }
        for (std::size_t k = 1; k < t.size(); ++k)
            if (!(t[k] >= t[k - 1])) {
                os << "thresholds must be nondecreasing";
                throw Error(Errc::InvalidThresholds, os.str());
            }
        if (std::find(t.begin(), t.end() - 1, kInf) != t.end() - 1) {
            os << "only the last threshold may be inf";
            throw Error(Errc::InvalidThresholds, os.str());
        }
    }
}

void validate(const EstimatorSpec& spec, int states) {
    std::visit(overloaded{
                   [](const Martingale&) {},
                   [](const Exponential& e) {
                       if (!(e.lambda >= 0.0)) throw Error(Errc::InvalidArgument, "lambda must be >= 0");
                   },
                   [](const Erlang& e) {
                       if (e.gamma < 2) throw Error(Errc::InvalidArgument, "Erlang stage count must be >= 2");
                       if (!(e.lambda > 0.0)) throw Error(Errc::InvalidArgument, "lambda must be > 0");
                   },
                   [](const TauMap& e) {
                       if (!(e.tau >= 0.0)) throw Error(Errc::InvalidArgument, "tau must be >= 0");
                   },
                   [states](const PMap& e) {
                       validate_thresholds(e.schedule.tau, states);
                       for (int i = 0; i < states; ++i) {
                           const auto& g = e.schedule.gamma[i];
                           if (g.size() + 1 != e.schedule.tau[i].size() || g.front() != i)
                               throw Error(Errc::InvalidThresholds, "stage values do not match thresholds");
                           for (int v : g)
                               if (v < 0 || v >= states)
                                   throw Error(Errc::InvalidThresholds, "stage value out of range");
                       }
                   },
               },
               spec);
}

PMapSchedule pmap_schedule(const Chain& chain, double mu,
                           const std::vector<std::vector<double>>& thresholds) {
    if (!(mu > 0.0)) throw Error(Errc::NonpositiveRate, "mu must be positive");
    const int n = chain.size();
    validate_thresholds(thresholds, n);
    PMapSchedule s;
    s.tau = thresholds;
    s.gamma.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& t = thresholds[i];
        s.gamma[i].push_back(i);
        for (std::size_t k = 1; k + 1 < t.size(); ++k)
            s.gamma[i].push_back(argmax_lowest(discounted_occupancy(chain, i, t[k], t[k + 1], mu)));
    }
    return s;
}

PMapSchedule pmap_from_map(const Chain& chain, const MapStructure& map) {
    if (static_cast<int>(map.tau_star.size()) != chain.size())
        throw Error(Errc::InvalidArgument, "MAP structure belongs to a different chain");
    PMapSchedule s;
    s.tau = map_thresholds(map);
    s.gamma = map.map_value;
    return s;
}

std::vector<std::vector<double>> map_thresholds(const MapStructure& map, int points) {
    std::vector<std::vector<double>> out(map.tau_star.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& pts = map.tau_star[i];
        std::size_t take = points < 0 ? pts.size() : std::min(pts.size(), static_cast<std::size_t>(points));
        out[i].push_back(0.0);
        out[i].insert(out[i].end(), pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(take));
        out[i].push_back(kInf);
    }
    return out;
}

PMapSchedule two_stage_schedule(int states, double tau, int i_star) {
    PMapSchedule s;
    s.tau.assign(states, {0.0, tau, kInf});
    s.gamma.resize(states);
    for (int i = 0; i < states; ++i) s.gamma[i] = {i, i_star};
    return s;
}

int evaluate_estimate(const EstimatorSpec& spec, int i_star, int last_sample, double age,
                      std::optional<int> aux_stage) {
    if (age < 0.0) throw Error(Errc::NegativeTime, "age must be nonnegative");
    return std::visit(
        overloaded{
            [&](const Martingale&) { return last_sample; },
            [&](const Exponential&) {
                if (!aux_stage) throw Error(Errc::MissingAuxStage, "exponential clock state required");
                return *aux_stage >= 2 ? i_star : last_sample;
            },
            [&](const Erlang& e) {
                if (!aux_stage) throw Error(Errc::MissingAuxStage, "auxiliary chain position required");
                return *aux_stage >= e.gamma ? i_star : last_sample;
            },
            [&](const TauMap& e) { return age > e.tau ? i_star : last_sample; },
            [&](const PMap& e) { return e.schedule.value_at(last_sample, age); },
        },
        spec);
}

}  // namespace qfresh
