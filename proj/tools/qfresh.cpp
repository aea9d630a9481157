// qfresh: command-line front end (mbf, map, smdp, multi, simulate, presets).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfresh/config.hpp"
#include "qfresh/error.hpp"
#include "qfresh/freshness.hpp"
#include "qfresh/multisource.hpp"
#include "qfresh/presets.hpp"
#include "qfresh/sim.hpp"
#include "qfresh/smdp.hpp"
#include "qfresh/statedep.hpp"

using namespace qfresh;

namespace {

struct ChainArgs {
    std::string config;
    std::string preset;
};

struct EstimatorArgs {
    std::string kinds;
    std::optional<double> lambda;
    std::optional<int> gamma;
    std::optional<double> tau;
    std::optional<int> from_map;
    std::optional<double> map_horizon;
};

std::string fmt(double v) { return format_double(v); }

std::optional<Config> load_config(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return Config::load(path);
}

Chain load_chain(const ChainArgs& a, const std::optional<Config>& cfg) {
    if (!a.preset.empty()) return preset_chain(a.preset);
    if (!cfg) throw Error(Errc::ParseError, "give --config FILE or --preset NAME");
    return chain_from_config(*cfg);
}

std::vector<double> parse_sweep(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    if (text.find(':') == std::string::npos) {
        out = parse_numbers(text, flag);
    } else {
        std::vector<double> p;
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ':')) p.push_back(parse_number(part, flag));
        if (p.size() != 3 || !(p[2] > 0.0) || p[1] < p[0])
            throw Error(Errc::InvalidArgument, flag + " sweep must be start:stop:step with step > 0");
        int n = static_cast<int>(std::floor((p[1] - p[0]) / p[2] + 1e-9)) + 1;
        for (int k = 0; k < n; ++k) out.push_back(p[0] + k * p[2]);
    }
    if (out.empty()) throw Error(Errc::InvalidArgument, flag + " needs at least one value");
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<EstimatorRecipe> recipes(const EstimatorArgs& a, const std::optional<Config>& cfg,
                                     const std::string& fallback) {
    std::vector<EstimatorRecipe> out;
    std::optional<EstimatorRecipe> base;
    if (cfg && cfg->has_section("estimator")) base = estimator_from_config(*cfg);
    std::vector<std::string> kinds = split_list(a.kinds);
    if (kinds.empty()) kinds.push_back(base ? base->kind : fallback);
    for (const auto& k : kinds) {
        EstimatorRecipe r = base && base->kind == k ? *base : estimator_from_kind(k);
        if (a.lambda) r.lambda = *a.lambda;
        if (a.gamma) r.gamma = *a.gamma;
        if (a.tau) r.tau = *a.tau;
        if (a.from_map) r.map_points = *a.from_map;
        if (a.map_horizon) r.map_horizon = *a.map_horizon;
        out.push_back(r);
    }
    return out;
}

void add_chain_flags(CLI::App* app, ChainArgs& a) {
    app->add_option("--config", a.config, "INI config file");
    app->add_option("--preset", a.preset, "bundled chain (see `qfresh presets`)");
}

void add_estimator_flags(CLI::App* app, EstimatorArgs& a, bool plural) {
    if (plural)
        app->add_option("--estimators,--estimator", a.kinds, "comma list of me,expe,erle,tmap,pmap");
    else
        app->add_option("--estimator", a.kinds, "me, tmap or pmap");
    app->add_option("--lam", a.lambda, "switch rate for expe/erle (default 1/tau*)");
    app->add_option("--gamma", a.gamma, "Erlang stage count (default 10)");
    app->add_option("--tau", a.tau, "tau-MAP threshold (default tau*)");
    app->add_option("--from-map", a.from_map, "pmap: use the first K MAP change points");
    app->add_option("--map-horizon", a.map_horizon, "horizon for the MAP change-point scan");
}

std::ostream& output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty()) return std::cout;
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) throw Error(Errc::ParseError, "cannot write '" + path + "'");
    return *holder;
}

// ---------------------------------------------------------------------------

struct MbfArgs {
    ChainArgs chain;
    EstimatorArgs est;
    std::string mu;
    std::string out;
    bool simulate = false;
    double sojourns = 1e6;
    int reps = 8;
    std::uint64_t seed = 1;
};

int run_mbf(const MbfArgs& a) {
    auto cfg = load_config(a.chain.config);
    ChainContext ctx(load_chain(a.chain, cfg));
    std::vector<double> mus = parse_sweep(a.mu, "--mu");
    for (double m : mus)
        if (!(m > 0.0)) throw Error(Errc::InvalidArgument, "--mu values must be positive");
    auto rs = recipes(a.est, cfg, "me");
    std::unique_ptr<std::ofstream> holder;
    std::ostream& os = output(a.out, holder);
    os << "mu,estimator,mbf,method,std_error\n";
    for (double mu : mus) {
        for (const auto& r : rs) {
            EstimatorSpec spec = ctx.resolve(r, mu);
            FreshnessReport rep = evaluate_mbf(ctx.chain(), spec, mu);
            os << fmt(mu) << ',' << r.kind << ',' << fmt(rep.mbf) << ',' << rep.method << ",\n";
            if (a.simulate) {
                SimConfig sc{ctx.chain(), spec, FixedRate{mu}, horizon_in_sojourns(ctx.chain(), a.sojourns)};
                sc.seed = a.seed;
                sc.replications = a.reps;
                SimResult s = simulate(sc);
                os << fmt(mu) << ',' << r.kind << ',' << fmt(s.empirical_mbf) << ",empirical," << fmt(s.std_error)
                   << '\n';
            }
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct MapArgs {
    ChainArgs chain;
    double horizon = 0.0;
};

int run_map(const MapArgs& a) {
    auto cfg = load_config(a.chain.config);
    Chain c = load_chain(a.chain, cfg);
    double h = a.horizon > 0.0 ? a.horizon : suggested_map_horizon(c);
    MapStructure ms = map_structure(c, h);
    std::cout << "# horizon=" << fmt(h) << " tau_star=" << fmt(ms.global_tau_star) << " i_star=" << ms.i_star
              << " unique_max=" << (ms.unique_max ? "true" : "false") << '\n';
    std::cout << "state,stage,start,value\n";
    for (int i = 0; i < c.size(); ++i) {
        for (std::size_t k = 0; k < ms.map_value[i].size(); ++k) {
            double start = k == 0 ? 0.0 : ms.tau_star[i][k - 1];
            std::cout << i << ',' << k << ',' << fmt(start) << ',' << ms.map_value[i][k] << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SmdpArgs {
    ChainArgs chain;
    EstimatorArgs est;
    double omega = 0.0;
    double eps1 = 1e-5;
    double eps2 = 1e-3;
    int grid = 200;
    std::string policy_out;
};

int run_smdp(const SmdpArgs& a) {
    auto cfg = load_config(a.chain.config);
    ChainContext ctx(load_chain(a.chain, cfg));
    if (!(a.omega > 0.0)) throw Error(Errc::InvalidArgument, "--omega must be positive");
    if (a.grid < 1) throw Error(Errc::InvalidArgument, "--grid must be positive");
    auto rs = recipes(a.est, cfg, "me");
    if (rs.size() != 1) throw Error(Errc::InvalidArgument, "smdp takes a single estimator");
    if (rs[0].kind == "expe" || rs[0].kind == "erle")
        throw Error(Errc::InvalidArgument, "smdp supports me, tmap and pmap");
    // Reversible MAP schedules do not depend on the rate; others use the budget.
    EstimatorSpec spec = ctx.resolve(rs[0], a.omega);
    ConstrainedOptions opt;
    opt.eps1 = a.eps1;
    opt.eps2 = a.eps2;
    PolicySolution sol = solve_constrained(ctx.chain(), spec, a.omega, ActionGrid::for_budget(a.omega, a.grid), opt);
    auto uniform = policy_metrics(ctx.chain(), spec, FixedRate{a.omega});

    std::ostringstream summary;
    summary << "[solution]\n"
            << "estimator = " << rs[0].kind << "\n"
            << "omega_budget = " << fmt(a.omega) << "\n"
            << "type = " << (sol.semi_simple ? "ssp" : "simple") << "\n"
            << "gamma = " << fmt(sol.gamma) << "\n"
            << "omega = " << fmt(sol.omega) << "\n"
            << "mbf = " << fmt(sol.mbf) << "\n"
            << "uniform_mbf = " << fmt(uniform.first) << "\n"
            << "gain = " << fmt(sol.mbf / uniform.first - 1.0) << "\n";
    std::ostringstream pol;
    write_policy(pol, sol.policy);
    std::cout << summary.str() << '\n' << pol.str();
    if (!a.policy_out.empty()) {
        std::ofstream f(a.policy_out);
        if (!f) throw Error(Errc::ParseError, "cannot write '" + a.policy_out + "'");
        f << pol.str() << '\n' << summary.str();
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct MultiArgs {
    std::string config;
    std::string budget;
    std::optional<double> rho_l;
    std::optional<double> rho_u;
    int random_bdc = 0;
    std::uint64_t seed = 2024;
    std::string estimator;
    int grid_points = 400;
    std::string out;
};

struct MultiSetup {
    std::vector<std::unique_ptr<ChainContext>> ctx;
    std::vector<EstimatorRecipe> recipe;
    std::vector<double> weight;
    std::vector<std::string> label;
};

MultiSetup multi_setup(const MultiArgs& a, const std::optional<Config>& cfg) {
    MultiSetup s;
    int random = a.random_bdc;
    std::uint64_t seed = a.seed;
    std::string kind = a.estimator;
    if (cfg && cfg->has_section("multi")) {
        if (random == 0) random = static_cast<int>(cfg->integer("multi", "random_bdc", 0));
        seed = static_cast<std::uint64_t>(cfg->integer("multi", "seed", static_cast<long>(seed)));
        if (kind.empty()) kind = cfg->text("multi", "estimator", "");
    }
    if (kind.empty()) kind = "pmap";
    if (random > 0) {
        // Sizes uniform on 3..6, rates uniform on [0.2, 2], weights proportional to the index.
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> size(3, 6);
        double total = random * (random + 1) / 2.0;
        for (int i = 0; i < random; ++i) {
            int n = size(rng);
            std::string label = "bdc" + std::to_string(i + 1);
            s.ctx.push_back(std::make_unique<ChainContext>(build_chain(random_birth_death(rng, n), label)));
            s.recipe.push_back(estimator_from_kind(kind));
            s.weight.push_back((i + 1) / total);
            s.label.push_back(label);
        }
        return s;
    }
    if (!cfg) throw Error(Errc::ParseError, "multi needs --config FILE or --random-bdc N");
    for (const auto& sec : cfg->sections()) {
        if (sec.rfind("source:", 0) != 0) continue;
        Chain c = chain_from_config(*cfg, sec);
        s.ctx.push_back(std::make_unique<ChainContext>(std::move(c)));
        EstimatorRecipe r = estimator_from_kind(cfg->text(sec, "estimator", kind));
        s.recipe.push_back(r);
        s.weight.push_back(cfg->number(sec, "weight"));
        s.label.push_back(sec.substr(7));
    }
    if (s.ctx.empty()) throw Error(Errc::ParseError, cfg->origin() + ": no [source:NAME] sections");
    return s;
}

int run_multi(const MultiArgs& a) {
    auto cfg = load_config(a.config);
    MultiSetup setup = multi_setup(a, cfg);
    std::string budget_text = a.budget;
    if (budget_text.empty() && cfg) budget_text = cfg->text("multi", "budget", "");
    if (budget_text.empty()) throw Error(Errc::ParseError, "give --budget (value or start:stop:step)");
    std::vector<double> budgets = parse_sweep(budget_text, "--budget");

    // Buffered so that a failure on a later budget leaves no partial table behind.
    std::ostringstream os;
    os << "budget,label,weight,rate,mbf,uniform_rate,uniform_mbf,weighted_rate,weighted_mbf,theta,fallback\n";
    for (double budget : budgets) {
        SourceSet set;
        set.budget = budget;
        set.rho_l = a.rho_l ? *a.rho_l : (cfg ? cfg->number("multi", "rho_l", 1e-3) : 1e-3);
        set.rho_u = a.rho_u ? *a.rho_u : (cfg ? cfg->number("multi", "rho_u", budget) : budget);
        for (std::size_t i = 0; i < setup.ctx.size(); ++i)
            set.sources.push_back(Source{setup.ctx[i]->chain(), setup.ctx[i]->resolve(setup.recipe[i], budget),
                                         setup.weight[i], setup.label[i]});
        Allocation opt = lagrangian_bisection(set, MultiOptions{1e-5, 1e-3, a.grid_points});
        Allocation uni = evaluate_allocation(set, uniform_allocation(set));
        Allocation wei = evaluate_allocation(set, weight_allocation(set));
        for (std::size_t i = 0; i < set.sources.size(); ++i) {
            int k = static_cast<int>(i);
            os << fmt(budget) << ',' << set.sources[i].label << ',' << fmt(set.sources[i].weight) << ','
               << fmt(opt.rates(k)) << ',' << fmt(opt.per_source_mbf[i]) << ',' << fmt(uni.rates(k)) << ','
               << fmt(uni.per_source_mbf[i]) << ',' << fmt(wei.rates(k)) << ',' << fmt(wei.per_source_mbf[i])
               << ",,\n";
        }
        os << fmt(budget) << ",ALL,1," << fmt(opt.total) << ',' << fmt(opt.objective) << ',' << fmt(uni.total)
           << ',' << fmt(uni.objective) << ',' << fmt(wei.total) << ',' << fmt(wei.objective) << ','
           << fmt(opt.theta) << ',' << (opt.used_fallback ? "pgd" : "bisection") << '\n';
    }
    std::unique_ptr<std::ofstream> holder;
    output(a.out, holder) << os.str();
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    ChainArgs chain;
    EstimatorArgs est;
    std::string policy;
    std::optional<double> mu;
    std::optional<double> horizon;
    std::optional<double> sojourns;
    std::optional<int> reps;
    std::optional<std::uint64_t> seed;
    std::string trace;
    bool validate = false;
};

int run_simulate(const SimulateArgs& a) {
    auto cfg = load_config(a.chain.config);
    if (!cfg && a.chain.preset.empty()) throw Error(Errc::ParseError, "simulate needs --config FILE or --preset");
    ChainContext ctx(load_chain(a.chain, cfg));
    const int n = ctx.chain().size();

    SamplingPolicy policy;
    if (!a.policy.empty()) {
        policy = policy_from_config(Config::load(a.policy), n);
    } else if (a.mu) {
        policy = FixedRate{*a.mu};
    } else if (cfg && cfg->has_section("policy")) {
        policy = policy_from_config(*cfg, n);
    } else {
        throw Error(Errc::ParseError, "no sampling policy: give --mu, --policy FILE or a [policy] section");
    }
    validate(policy, n);
    Vector rates = effective_rates(policy, n);

    auto rs = recipes(a.est, cfg, "me");
    if (rs.size() != 1) throw Error(Errc::InvalidArgument, "simulate takes a single estimator");
    double ref_rate = std::holds_alternative<FixedRate>(policy) ? rates(0) : rates.mean();
    EstimatorSpec spec = ctx.resolve(rs[0], ref_rate);

    SimConfig sc{ctx.chain(), spec, policy, 0.0};
    double sojourns = a.sojourns ? *a.sojourns : (cfg ? cfg->number("sim", "sojourns", 1e6) : 1e6);
    sc.horizon = a.horizon ? *a.horizon
                           : (cfg && cfg->has("sim", "horizon") ? cfg->number("sim", "horizon")
                                                                : horizon_in_sojourns(ctx.chain(), sojourns));
    sc.warmup = cfg ? cfg->number("sim", "warmup", -1.0) : -1.0;
    sc.seed = a.seed ? *a.seed : (cfg ? static_cast<std::uint64_t>(cfg->integer("sim", "seed", 1)) : 1);
    sc.replications = a.reps ? *a.reps : (cfg ? static_cast<int>(cfg->integer("sim", "replications", 8)) : 8);
    validate(sc);

    SimResult r = simulate(sc);
    std::cout << "estimator = " << rs[0].kind << "\n"
              << "replications = " << sc.replications << "\n"
              << "horizon = " << fmt(sc.horizon) << "\n"
              << "empirical_mbf = " << fmt(r.empirical_mbf) << "\n"
              << "std_error = " << fmt(r.std_error) << "\n"
              << "fresh_time = " << fmt(r.fresh_time) << "\n"
              << "total_time = " << fmt(r.total_time) << "\n"
              << "query_count = " << r.query_count << "\n"
              << "empirical_omega = " << fmt(r.empirical_omega) << "\n"
              << "omega_std_error = " << fmt(r.omega_std_error) << "\n";
    if (a.validate) {
        double analytic_mbf = 0.0, analytic_omega = 0.0;
        if (is_deterministic(spec) || std::holds_alternative<FixedRate>(policy)) {
            auto m = policy_metrics(ctx.chain(), spec, policy);
            analytic_mbf = m.first;
            analytic_omega = m.second;
            std::cout << "closed_mbf = " << fmt(analytic_mbf) << "\n"
                      << "z_mbf = " << fmt((r.empirical_mbf - analytic_mbf) / r.std_error) << "\n"
                      << "closed_omega = " << fmt(analytic_omega) << "\n"
                      << "z_omega = " << fmt((r.empirical_omega - analytic_omega) / r.omega_std_error) << "\n";
        } else {
            std::cout << "closed_mbf = unavailable\n";
        }
    }
    if (!a.trace.empty()) {
        std::ofstream f(a.trace);
        if (!f) throw Error(Errc::ParseError, "cannot write '" + a.trace + "'");
        simulate_replication(sc, 0, &f);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean binary freshness for remote estimation of Markov sources"};
    app.require_subcommand(1);

    MbfArgs mbf;
    auto* c_mbf = app.add_subcommand("mbf", "closed-form MBF over a sampling-rate sweep");
    add_chain_flags(c_mbf, mbf.chain);
    add_estimator_flags(c_mbf, mbf.est, true);
    c_mbf->add_option("--mu", mbf.mu, "rate, list a,b,c or sweep start:stop:step")->required();
    c_mbf->add_option("--out", mbf.out, "CSV file (default stdout)");
    c_mbf->add_flag("--simulate", mbf.simulate, "add simulated rows");
    c_mbf->add_option("--sojourns", mbf.sojourns, "simulation horizon in mean sojourn times");
    c_mbf->add_option("--reps", mbf.reps, "simulation replications");
    c_mbf->add_option("--seed", mbf.seed, "simulation seed");

    MapArgs map;
    auto* c_map = app.add_subcommand("map", "MAP change points per starting state");
    add_chain_flags(c_map, map.chain);
    c_map->add_option("--horizon", map.horizon, "scan horizon (default: suggested)");

    SmdpArgs smdp;
    auto* c_smdp = app.add_subcommand("smdp", "optimal state-dependent rates under a rate budget");
    add_chain_flags(c_smdp, smdp.chain);
    add_estimator_flags(c_smdp, smdp.est, false);
    c_smdp->add_option("--omega", smdp.omega, "average sampling-rate budget")->required();
    c_smdp->add_option("--eps1", smdp.eps1, "multiplier bisection tolerance");
    c_smdp->add_option("--eps2", smdp.eps2, "rate gap below which no randomization is used");
    c_smdp->add_option("--grid", smdp.grid, "number of log-spaced actions");
    c_smdp->add_option("--policy-out", smdp.policy_out, "write the policy file here");

    MultiArgs multi;
    auto* c_multi = app.add_subcommand("multi", "rate allocation across several sources");
    c_multi->add_option("--config", multi.config, "INI file with [multi] and [source:NAME] sections");
    c_multi->add_option("--budget", multi.budget, "total rate, list or start:stop:step sweep");
    c_multi->add_option("--rho-l", multi.rho_l, "lower rate bound per source");
    c_multi->add_option("--rho-u", multi.rho_u, "upper rate bound per source (default: budget)");
    c_multi->add_option("--random-bdc", multi.random_bdc, "generate N random birth-death sources");
    c_multi->add_option("--seed", multi.seed, "seed for --random-bdc");
    c_multi->add_option("--estimator", multi.estimator, "estimator for every source (default pmap)");
    c_multi->add_option("--grid-points", multi.grid_points, "rate grid size per source");
    c_multi->add_option("--out", multi.out, "CSV file (default stdout)");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "discrete-event simulation of the monitoring loop");
    add_chain_flags(c_sim, sim.chain);
    add_estimator_flags(c_sim, sim.est, false);
    c_sim->add_option("--policy", sim.policy, "policy file (as written by smdp --policy-out)");
    c_sim->add_option("--mu", sim.mu, "fixed sampling rate");
    c_sim->add_option("--horizon", sim.horizon, "simulated time per replication");
    c_sim->add_option("--sojourns", sim.sojourns, "horizon in mean sojourn times (default 1e6)");
    c_sim->add_option("--reps", sim.reps, "replications");
    c_sim->add_option("--seed", sim.seed, "base seed");
    c_sim->add_option("--trace", sim.trace, "write the event trace of replication 0");
    c_sim->add_flag("--validate", sim.validate, "compare against the closed form");

    auto* c_presets = app.add_subcommand("presets", "list bundled chains");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_mbf->parsed()) return run_mbf(mbf);
        if (c_map->parsed()) return run_map(map);
        if (c_smdp->parsed()) return run_smdp(smdp);
        if (c_multi->parsed()) return run_multi(multi);
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_presets->parsed()) {
            for (const auto& n : preset_names()) std::cout << n << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "qfresh: " << e.what() << '\n';
        return is_config_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "qfresh: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
