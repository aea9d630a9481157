#include "qfresh/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qfresh/error.hpp"
#include "qfresh/presets.hpp"

namespace qfresh {

namespace {

std::string field_name(const std::string& section, const std::string& key) { return section + "." + key; }

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void from_tree(const boost::property_tree::ptree& tree, const std::string& origin,
                 std::map<std::string, std::map<std::string, std::string>>& out) {
    for (const auto& [name, node] : tree) {
        if (node.empty()) throw Error(Errc::ParseError, origin + ": key '" + name + "' is outside any section");
        auto& sec = out[name];
        for (const auto& [key, leaf] : node) sec[key] = trim(leaf.data());
    }
}

}  // namespace

double parse_number(const std::string& token, const std::string& field) {
    std::string t = trim(token);
    if (t.empty()) throw Error(Errc::ParseError, field + ": expected a number, got nothing");
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE || std::isnan(v))
        throw Error(Errc::ParseError, field + ": '" + t + "' is not a number");
    return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& field) {
    std::string s = text;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_number(tok, field));
    return out;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        std::ostringstream os;
        os << origin << ":" << e.line() << ": " << e.message();
        throw Error(Errc::ParseError, os.str());
    }
    Config c;
    c.origin_ = origin;
    from_tree(tree, origin, c.data_);
    return c;
}

bool Config::has_section(const std::string& section) const { return data_.count(section) != 0; }

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = data_.find(section);
    return it != data_.end() && it->second.count(key) != 0;
}

std::vector<std::string> Config::sections() const {
    std::vector<std::string> out;
    for (const auto& kv : data_) out.push_back(kv.first);
    return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
    std::vector<std::string> out;
    auto it = data_.find(section);
    if (it != data_.end())
        for (const auto& kv : it->second) out.push_back(kv.first);
    return out;
}

std::string Config::text(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw Error(Errc::ParseError, origin_ + ": missing " + field_name(section, key));
    return data_.at(section).at(key);
}

std::string Config::text(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? data_.at(section).at(key) : fallback;
}

double Config::number(const std::string& section, const std::string& key) const {
    return parse_number(text(section, key), origin_ + ": " + field_name(section, key));
}

double Config::number(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

long Config::integer(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    double v = number(section, key);
    if (v != std::floor(v) || std::abs(v) > 1e15)
        throw Error(Errc::ParseError, origin_ + ": " + field_name(section, key) + " must be an integer");
    return static_cast<long>(v);
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
    return parse_numbers(text(section, key), origin_ + ": " + field_name(section, key));
}

Chain chain_from_config(const Config& cfg, const std::string& section) {
    if (!cfg.has_section(section)) throw Error(Errc::ParseError, cfg.origin() + ": missing [" + section + "]");
    if (cfg.has(section, "preset")) {
        std::string name = cfg.text(section, "preset");
        return build_chain(preset_generator(name), cfg.text(section, "label", name));
    }
    long n = cfg.integer(section, "size", 0);
    if (n < 2) throw Error(Errc::ParseError, cfg.origin() + ": " + section + ".size must be at least 2");
    std::vector<double> r = cfg.numbers(section, "rates");
    if (static_cast<long>(r.size()) != n * n) {
        std::ostringstream os;
        os << cfg.origin() << ": " << section << ".rates has " << r.size() << " entries, expected " << n * n;
        throw Error(Errc::ParseError, os.str());
    }
    Matrix q(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) q(i, j) = r[static_cast<std::size_t>(i * n + j)];
    return build_chain(q, cfg.text(section, "label", "custom"));
}

EstimatorRecipe estimator_from_kind(const std::string& kind) {
    static const char* known[] = {"me", "expe", "erle", "tmap", "pmap"};
    for (const char* k : known)
        if (kind == k) {
            EstimatorRecipe r;
            r.kind = kind;
            return r;
        }
    throw Error(Errc::ParseError, "unknown estimator '" + kind + "' (use me, expe, erle, tmap, pmap)");
}

EstimatorRecipe estimator_from_config(const Config& cfg, const std::string& section) {
    EstimatorRecipe r = estimator_from_kind(cfg.text(section, "kind", "me"));
    const std::string where = cfg.origin() + ": " + section + ".";
    if (cfg.has(section, "lambda")) r.lambda = cfg.number(section, "lambda");
    r.gamma = static_cast<int>(cfg.integer(section, "gamma", 10));
    if (cfg.has(section, "tau")) {
        std::string t = cfg.text(section, "tau");
        if (t != "taustar") r.tau = parse_number(t, where + "tau");
    }
    if (cfg.has(section, "from_map")) {
        std::string t = cfg.text(section, "from_map");
        r.map_points = t == "all" ? -1 : static_cast<int>(cfg.integer(section, "from_map", -1));
    }
    r.map_horizon = cfg.number(section, "map_horizon", 0.0);
    if (cfg.has(section, "thresholds")) {
        // Interior change points per state, states separated by '|'.
        std::vector<std::vector<double>> th;
        std::stringstream ss(cfg.text(section, "thresholds"));
        std::string part;
        while (std::getline(ss, part, '|')) {
            std::vector<double> pts = parse_numbers(part, where + "thresholds");
            pts.insert(pts.begin(), 0.0);
            pts.push_back(kInf);
            th.push_back(pts);
        }
        r.thresholds = th;
    }
    return r;
}

ChainContext::ChainContext(Chain chain, double map_horizon) : chain_(std::move(chain)), horizon_(map_horizon) {}

const MapStructure& ChainContext::map() {
    if (!map_) {
        double h = horizon_ > 0.0 ? horizon_ : suggested_map_horizon(chain_);
        map_ = map_structure(chain_, h);
    }
    return *map_;
}

double ChainContext::tau_star() { return map().global_tau_star; }

EstimatorSpec ChainContext::resolve(const EstimatorRecipe& recipe, double mu) {
    if (recipe.map_horizon > 0.0 && !map_) horizon_ = recipe.map_horizon;
    auto default_lambda = [&] {
        double ts = tau_star();
        if (!(ts > 0.0)) throw Error(Errc::InvalidArgument, "tau* is zero; give lambda explicitly");
        return 1.0 / ts;
    };
    if (recipe.kind == "me") return Martingale{};
    if (recipe.kind == "expe") return Exponential{recipe.lambda ? *recipe.lambda : default_lambda()};
    if (recipe.kind == "erle") return Erlang{recipe.gamma, recipe.lambda ? *recipe.lambda : default_lambda()};
    if (recipe.kind == "tmap") return TauMap{recipe.tau ? *recipe.tau : tau_star()};
    if (recipe.kind == "pmap") {
        if (recipe.thresholds) return PMap{pmap_schedule(chain_, mu, *recipe.thresholds)};
        return PMap{pmap_schedule(chain_, mu, map_thresholds(map(), recipe.map_points))};
    }
    throw Error(Errc::ParseError, "unknown estimator '" + recipe.kind + "'");
}

SamplingPolicy policy_from_config(const Config& cfg, int states, const std::string& section) {
    std::string kind = cfg.text(section, "kind", "fixed");
    const std::string where = cfg.origin() + ": " + section + ".mu";
    auto rate_vector = [&] {
        std::vector<double> v = cfg.numbers(section, "mu");
        if (static_cast<int>(v.size()) != states) {
            std::ostringstream os;
            os << where << " has " << v.size() << " entries, expected " << states;
            throw Error(Errc::ParseError, os.str());
        }
        return Vector(Eigen::Map<Vector>(v.data(), states));
    };
    SamplingPolicy p;
    if (kind == "fixed") {
        p = FixedRate{cfg.number(section, "mu")};
    } else if (kind == "per_state") {
        p = PerState{rate_vector()};
    } else if (kind == "semi_simple") {
        SemiSimple s;
        s.mu = rate_vector();
        s.r = static_cast<int>(cfg.integer(section, "r", -1));
        s.mu_r1 = cfg.number(section, "mu_r1");
        s.mu_r2 = cfg.number(section, "mu_r2");
        s.p = cfg.number(section, "p");
        p = s;
    } else {
        throw Error(Errc::ParseError, cfg.origin() + ": " + section + ".kind '" + kind +
                                          "' (use fixed, per_state, semi_simple)");
    }
    try {
        validate(p, states);
    } catch (const Error& e) {
        throw Error(Errc::ParseError, cfg.origin() + ": [" + section + "] " + e.what());
    }
    return p;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_policy(std::ostream& os, const SamplingPolicy& policy) {
    auto rates = [&](const Vector& mu) {
        os << "mu =";
        for (int i = 0; i < mu.size(); ++i) os << ' ' << format_double(mu(i));
        os << '\n';
    };
    os << "[policy]\n";
    if (const auto* f = std::get_if<FixedRate>(&policy)) {
        os << "kind = fixed\nmu = " << format_double(f->mu) << '\n';
    } else if (const auto* ps = std::get_if<PerState>(&policy)) {
        os << "kind = per_state\n";
        rates(ps->mu);
    } else {
        const auto& s = std::get<SemiSimple>(policy);
        os << "kind = semi_simple\n";
        rates(s.mu);
        os << "r = " << s.r << "\nmu_r1 = " << format_double(s.mu_r1) << "\nmu_r2 = " << format_double(s.mu_r2)
           << "\np = " << format_double(s.p) << '\n';
    }
}

}  // namespace qfresh
