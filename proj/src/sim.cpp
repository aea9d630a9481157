#include "qfresh/sim.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "qfresh/error.hpp"
#include "qfresh/parallel.hpp"

namespace qfresh {

namespace {

struct Batches {
    std::vector<double> fresh;
    std::vector<double> queries;
    Matrix occupancy;  // batch x state
};

class Replication {
public:
    Replication(const SimConfig& cfg, int rep, std::ostream* trace)
        : cfg_(cfg), trace_(trace), n_(cfg.chain.size()), i_star_(cfg.chain.i_star()) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(rep)};
        rng_.seed(seq);
        warmup_ = cfg.warmup < 0.0 ? 0.01 * cfg.horizon : cfg.warmup;
        batch_len_ = (cfg.horizon - warmup_) / cfg.batches;
        batches_.fresh.assign(cfg.batches, 0.0);
        batches_.queries.assign(cfg.batches, 0.0);
        batches_.occupancy = Matrix::Zero(cfg.batches, n_);

        const Matrix& q = cfg.chain.generator();
        jump_cdf_.resize(n_);
        for (int i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n_; ++j) {
                if (j != i) acc += q(i, j) / cfg.chain.exit_rate(i);
                jump_cdf_[i].push_back(acc);
            }
        }
        if (const auto* f = std::get_if<FixedRate>(&cfg.policy)) {
            rates_ = Vector::Constant(n_, f->mu);
        } else if (const auto* ps = std::get_if<PerState>(&cfg.policy)) {
            rates_ = ps->mu;
        } else {
            ssp_ = &std::get<SemiSimple>(cfg.policy);
            rates_ = ssp_->mu;
        }
    }

    SimResult run() {
        const Vector& pi = cfg_.chain.stationary();
        x_ = draw(pi);
        t_jump_ = exp_draw(cfg_.chain.exit_rate(x_));
        take_sample(draw(pi), 0.0);
        double now = 0.0;
        bool started = false;
        for (;;) {
            double next = std::min({t_jump_, t_query_, t_stage_});
            if (!started && next >= warmup_) {
                accumulate(now, warmup_);
                now = warmup_;
                started = true;
                log("start", now);
            }
            if (next >= cfg_.horizon) {
                accumulate(now, cfg_.horizon);
                now = cfg_.horizon;
                log("end", now);
                break;
            }
            accumulate(now, next);
            now = next;
            if (next == t_jump_) {
                x_ = pick_jump(x_);
                t_jump_ = now + exp_draw(cfg_.chain.exit_rate(x_));
                if (started) log("jump", now);
            } else if (next == t_query_) {
                if (started) add_query(now);
                take_sample(x_, now);
                if (started) log("query", now);
            } else {
                advance_stage(now);
                if (started) log("stage", now);
            }
        }

        SimResult r;
        r.fresh_time = fresh_;
        r.total_time = cfg_.horizon - warmup_;
        r.empirical_mbf = r.fresh_time / r.total_time;
        r.query_count = queries_;
        r.empirical_omega = static_cast<double>(queries_) / r.total_time;
        r.occupancy = occupancy_ / r.total_time;
        r.replication_mbf = {r.empirical_mbf};
        return r;
    }

    const Batches& batches() const { return batches_; }
    double batch_length() const { return batch_len_; }

private:
    int draw(const Vector& p) {
        double u = unif_(rng_), acc = 0.0;
        for (int k = 0; k < p.size(); ++k) {
            acc += p(k);
            if (u < acc) return k;
        }
        return static_cast<int>(p.size()) - 1;
    }

    double exp_draw(double rate) { return expo_(rng_) / rate; }

    int pick_jump(int from) {
        double u = unif_(rng_);
        const auto& cdf = jump_cdf_[from];
        int to = 0;
        while (to < n_ - 1 && (to == from || cdf[to] <= u)) ++to;
        if (to == from) to = from == 0 ? 1 : from - 1;
        return to;
    }

    void take_sample(int state, double now) {
        last_ = state;
        sampled_at_ = now;
        stage_ = 0;
        t_stage_ = kInf;
        xh_ = state;
        if (const auto* e = std::get_if<Exponential>(&cfg_.estimator)) {
            if (e->lambda > 0.0) t_stage_ = now + exp_draw(e->lambda);
        } else if (const auto* e = std::get_if<Erlang>(&cfg_.estimator)) {
            stage_ = 1;
            t_stage_ = now + exp_draw(e->lambda * e->gamma);
        } else if (const auto* e = std::get_if<TauMap>(&cfg_.estimator)) {
            t_stage_ = now + e->tau;
        } else if (const auto* e = std::get_if<PMap>(&cfg_.estimator)) {
            xh_ = e->schedule.gamma[state][0];
            t_stage_ = now + e->schedule.tau[state][1];
        }
        qrate_ = rates_(state);
        if (ssp_ && state == ssp_->r) qrate_ = unif_(rng_) < ssp_->p ? ssp_->mu_r1 : ssp_->mu_r2;
        t_query_ = now + exp_draw(qrate_);
    }

    void advance_stage(double now) {
        if (const auto* e = std::get_if<Erlang>(&cfg_.estimator)) {
            ++stage_;
            if (stage_ >= e->gamma) {
                xh_ = i_star_;
                t_stage_ = kInf;
            } else {
                t_stage_ = now + exp_draw(e->lambda * e->gamma);
            }
        } else if (const auto* e = std::get_if<PMap>(&cfg_.estimator)) {
            ++stage_;
            xh_ = e->schedule.gamma[last_][stage_];
            t_stage_ = sampled_at_ + e->schedule.tau[last_][stage_ + 1];
        } else {
            xh_ = i_star_;
            t_stage_ = kInf;
        }
    }

    int batch_of(double t) const {
        int b = static_cast<int>((t - warmup_) / batch_len_);
        return std::clamp(b, 0, cfg_.batches - 1);
    }

    void add_query(double now) {
        ++queries_;
        batches_.queries[batch_of(now)] += 1.0;
    }

    void accumulate(double from, double to) {
        if (to <= warmup_) return;
        double a = std::max(from, warmup_);
        if (!(to > a)) return;
        if (x_ == xh_) fresh_ += to - a;
        occupancy_(x_) += to - a;
        // Split across batch boundaries for the batch-means bookkeeping.
        while (a < to) {
            int b = batch_of(a);
            double edge = b + 1 == cfg_.batches ? to : std::min(to, warmup_ + (b + 1) * batch_len_);
            if (!(edge > a)) edge = to;
            if (x_ == xh_) batches_.fresh[b] += edge - a;
            batches_.occupancy(b, x_) += edge - a;
            a = edge;
        }
    }

    void log(const char* kind, double now) {
        if (!trace_) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.17g,%s,%d,%d,%.17g\n", now, kind, x_, xh_, qrate_);
        *trace_ << buf;
    }

    const SimConfig& cfg_;
    std::ostream* trace_;
    const int n_;
    const int i_star_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::exponential_distribution<double> expo_{1.0};
    std::vector<std::vector<double>> jump_cdf_;
    Vector rates_;
    const SemiSimple* ssp_ = nullptr;

    double warmup_ = 0.0;
    double batch_len_ = 0.0;
    int x_ = 0;
    int last_ = 0;
    int xh_ = 0;
    int stage_ = 0;
    double sampled_at_ = 0.0;
    double qrate_ = 0.0;
    double t_jump_ = kInf;
    double t_query_ = kInf;
    double t_stage_ = kInf;
    double fresh_ = 0.0;
    std::int64_t queries_ = 0;
    Vector occupancy_ = Vector::Zero(n_);
    Batches batches_;
};

double std_error_of(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (n - 1) / n);
}

struct RepOutput {
    SimResult result;
    Batches batches;
    double batch_len = 0.0;
};

}  // namespace

void validate(const SimConfig& config) {
    validate(config.estimator, config.chain.size());
    validate(config.policy, config.chain.size());
    if (!(config.horizon > 0.0) || !std::isfinite(config.horizon))
        throw Error(Errc::InvalidArgument, "horizon must be positive");
    double warm = config.warmup < 0.0 ? 0.01 * config.horizon : config.warmup;
    if (!(config.horizon > warm)) throw Error(Errc::InvalidArgument, "horizon must exceed warmup");
    if (config.replications < 1) throw Error(Errc::InvalidArgument, "need at least one replication");
    if (config.batches < 1) throw Error(Errc::InvalidArgument, "need at least one batch");
}

SimResult simulate_replication(const SimConfig& config, int replication, std::ostream* trace) {
    validate(config);
    if (trace) *trace << "time,event,source,estimate,rate\n";
    Replication rep(config, replication, trace);
    return rep.run();
}

SimResult simulate(const SimConfig& config) {
    validate(config);
    const int reps = config.replications;
    std::vector<RepOutput> outs(reps);
    parallel_for(reps, [&](int k) {
        Replication rep(config, k, nullptr);
        outs[k].result = rep.run();
        outs[k].batches = rep.batches();
        outs[k].batch_len = rep.batch_length();
    });

    const int n = config.chain.size();
    SimResult r;
    r.occupancy = Vector::Zero(n);
    std::vector<double> fresh_means, rate_means;
    std::vector<std::vector<double>> occ_means(n);
    for (const auto& o : outs) {
        r.fresh_time += o.result.fresh_time;
        r.total_time += o.result.total_time;
        r.query_count += o.result.query_count;
        r.occupancy += o.result.occupancy * o.result.total_time;
        r.replication_mbf.push_back(o.result.empirical_mbf);
        for (int b = 0; b < config.batches; ++b) {
            fresh_means.push_back(o.batches.fresh[b] / o.batch_len);
            rate_means.push_back(o.batches.queries[b] / o.batch_len);
            for (int s = 0; s < n; ++s) occ_means[s].push_back(o.batches.occupancy(b, s) / o.batch_len);
        }
    }
    r.empirical_mbf = r.fresh_time / r.total_time;
    r.empirical_omega = static_cast<double>(r.query_count) / r.total_time;
    r.occupancy /= r.total_time;
    r.std_error = std_error_of(fresh_means);
    r.omega_std_error = std_error_of(rate_means);
    r.occupancy_std_error.resize(n);
    for (int s = 0; s < n; ++s) r.occupancy_std_error(s) = std_error_of(occ_means[s]);
    return r;
}

double mbf_from_trace(std::istream& trace) {
    std::string line;
    std::getline(trace, line);  // header
    double start = 0.0, prev = 0.0, fresh = 0.0;
    bool first = true, prev_fresh = false;
    while (std::getline(trace, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        double t = std::strtod(field.c_str(), nullptr);
        std::getline(row, field, ',');
        std::getline(row, field, ',');
        int x = std::stoi(field);
        std::getline(row, field, ',');
        int xh = std::stoi(field);
        if (first) {
            start = t;
            first = false;
        } else if (prev_fresh) {
            fresh += t - prev;
        }
        prev = t;
        prev_fresh = x == xh;
    }
    if (first) throw Error(Errc::ParseError, "empty trace");
    return fresh / (prev - start);
}

double horizon_in_sojourns(const Chain& chain, double sojourns) { return sojourns * mean_sojourn_time(chain); }

std::string empirical_sweep(const std::vector<SimConfig>& configs) {
    std::ostringstream os;
    os << "index,chain,estimator,empirical_mbf,std_error,empirical_omega,query_count,total_time\n";
    for (std::size_t k = 0; k < configs.size(); ++k) {
        SimResult r = simulate(configs[k]);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.17g,%.17g,%.17g,%" PRId64 ",%.17g\n", k,
                      configs[k].chain.label().c_str(), estimator_name(configs[k].estimator).c_str(),
                      r.empirical_mbf, r.std_error, r.empirical_omega, r.query_count, r.total_time);
        os << buf;
    }
    return os.str();
}

}  // namespace qfresh
