#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfresh/ctmc.hpp"
#include "qfresh/estimators.hpp"
#include "qfresh/statedep.hpp"

namespace qfresh {

// INI-style document: [section] headers, key = value lines, ';' or '#'
// comments. Lookup errors name the offending section.key.
class Config {
public:
    static Config load(const std::string& path);
    static Config parse(const std::string& text, const std::string& origin = "<string>");

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    std::vector<std::string> sections() const;
    std::vector<std::string> keys(const std::string& section) const;

    std::string text(const std::string& section, const std::string& key) const;
    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;
    double number(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key, double fallback) const;
    long integer(const std::string& section, const std::string& key, long fallback) const;
    std::vector<double> numbers(const std::string& section, const std::string& key) const;

    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
    std::string origin_;
};

// Parses "0.5", "inf", "1e-3"; throws ParseError naming `field` otherwise.
double parse_number(const std::string& token, const std::string& field);
std::vector<double> parse_numbers(const std::string& text, const std::string& field);

// [chain]: preset = NAME, or size = S with rates = S*S row-major numbers.
Chain chain_from_config(const Config& cfg, const std::string& section = "chain");

// Estimator description whose data-dependent defaults (tau*, 1/tau*, MAP
// schedule) are resolved against a chain and a sampling rate.
struct EstimatorRecipe {
    std::string kind = "me";  // me | expe | erle | tmap | pmap
    std::optional<double> lambda;
    int gamma = 10;
    std::optional<double> tau;
    int map_points = -1;  // pmap: first K MAP change points, -1 = all
    std::optional<std::vector<std::vector<double>>> thresholds;
    double map_horizon = 0.0;  // 0 = suggested horizon
};

EstimatorRecipe estimator_from_config(const Config& cfg, const std::string& section = "estimator");
EstimatorRecipe estimator_from_kind(const std::string& kind);

// Caches the MAP structure of one chain.
class ChainContext {
public:
    explicit ChainContext(Chain chain, double map_horizon = 0.0);
    const Chain& chain() const { return chain_; }
    const MapStructure& map();
    double tau_star();

    EstimatorSpec resolve(const EstimatorRecipe& recipe, double mu);

private:
    Chain chain_;
    double horizon_;
    std::optional<MapStructure> map_;
};

// [policy]: kind = fixed | per_state | semi_simple with mu, r, mu_r1, mu_r2, p.
SamplingPolicy policy_from_config(const Config& cfg, int states, const std::string& section = "policy");
void write_policy(std::ostream& os, const SamplingPolicy& policy);

std::string format_double(double v);

}  // namespace qfresh
