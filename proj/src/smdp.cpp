#include "qfresh/smdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qfresh/error.hpp"
#include "qfresh/freshness.hpp"
#include "qfresh/parallel.hpp"

namespace qfresh {

namespace {

constexpr double kTieTol = 1e-12;
constexpr double kExactBudget = 1e-12;
constexpr double kProbTol = 1e-10;
constexpr double kGammaCeiling = 1e15;

Vector embedded_stationary(const SmdpModel& m, const std::vector<int>& actions) {
    const int n = m.states();
    // Column s holds the next-sample law from s, so a = P^T - I.
    Matrix a(n, n);
    for (int s = 0; s < n; ++s) a.col(s) = m.transition(s, actions[s]);
    a -= Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    return a.fullPivLu().solve(rhs);
}

Vector rates_of(const SmdpModel& m, const std::vector<int>& actions) {
    Vector mu(m.states());
    for (int s = 0; s < m.states(); ++s) mu(s) = m.rate(actions[s]);
    return mu;
}

double simple_omega(const SmdpModel& m, const std::vector<int>& actions) {
    Vector nu = embedded_stationary(m, actions);
    double cycle = 0.0;
    for (int s = 0; s < m.states(); ++s) cycle += nu(s) / m.rate(actions[s]);
    return 1.0 / cycle;
}

}  // namespace

Vector absorption_probs(const Chain& chain, int i, double mu) {
    if (!(mu > 0.0)) throw Error(Errc::NonpositiveRate, "mu must be positive");
    const int n = chain.size();
    // Row vector x with x (mu I - Q) = mu e_i.
    Matrix a = mu * Matrix::Identity(n, n) - chain.generator().transpose();
    Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() > 1e-14)) throw Error(Errc::SingularSystem, "absorption system is singular");
    Vector x = lu.solve(mu * Vector::Unit(n, i));
    x = x.cwiseMax(0.0);
    return x / x.sum();
}

ActionGrid ActionGrid::log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw Error(Errc::InvalidArgument, "bad action grid");
    ActionGrid g;
    if (count == 1) {
        g.rates.push_back(lo);
        return g;
    }
    const double step = std::log(hi / lo) / (count - 1);
    for (int k = 0; k < count; ++k) g.rates.push_back(k + 1 == count ? hi : lo * std::exp(step * k));
    return g;
}

ActionGrid ActionGrid::for_budget(double omega, int count) {
    if (!(omega > 0.0)) throw Error(Errc::NonpositiveRate, "budget must be positive");
    return log_spaced(std::min(1e-3, omega / 100.0), 20.0 * omega, count);
}

SmdpModel::SmdpModel(const Chain& chain, EstimatorSpec spec, ActionGrid grid)
    : chain_(chain), spec_(std::move(spec)), grid_(std::move(grid)), states_(chain.size()) {
    if (grid_.rates.empty()) throw Error(Errc::InvalidArgument, "action grid is empty");
    if (!is_deterministic(spec_))
        throw Error(Errc::RandomizedEstimatorUnsupported, "SMDP rewards need a deterministic estimator");
    validate(spec_, states_);
    const int na = actions();
    fresh_.assign(static_cast<std::size_t>(states_) * na, 0.0);
    next_.assign(static_cast<std::size_t>(states_) * na, Vector());
    parallel_for(states_ * na, [&](int k) {
        const int s = k / na, a = k % na;
        fresh_[k] = expected_fresh_time(chain_, spec_, s, grid_.rates[a]);
        next_[k] = absorption_probs(chain_, s, grid_.rates[a]);
    });
}

PolicySolution evaluate_policy(const SmdpInstance& inst, const std::vector<int>& actions) {
    const SmdpModel& m = *inst.model;
    const int n = m.states();
    // Unknowns: V_0..V_{n-2}, gain; V_{n-1} = 0.
    Matrix a = Matrix::Zero(n, n);
    Vector b(n);
    for (int s = 0; s < n; ++s) {
        const Vector& p = m.transition(s, actions[s]);
        for (int t = 0; t + 1 < n; ++t) a(s, t) = (s == t ? 1.0 : 0.0) - p(t);
        a(s, n - 1) = inst.sojourn(actions[s]);
        b(s) = inst.reward(s, actions[s]);
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw Error(Errc::SingularSystem, "relative-value system is singular");
    Vector x = lu.solve(b);
    PolicySolution sol;
    sol.actions = actions;
    sol.avg_reward = x(n - 1);
    sol.relative_values = Vector::Zero(n);
    sol.relative_values.head(n - 1) = x.head(n - 1);
    sol.gamma = inst.gamma;
    double res = 0.0;
    for (int s = 0; s < n; ++s) {
        const Vector& p = m.transition(s, actions[s]);
        double lhs = sol.avg_reward * inst.sojourn(actions[s]) + sol.relative_values(s);
        double rhs = inst.reward(s, actions[s]) + p.dot(sol.relative_values);
        res = std::max(res, std::abs(lhs - rhs));
    }
    sol.residual = res;

    Vector nu = embedded_stationary(m, actions);
    double cycle = 0.0, fresh = 0.0;
    for (int s = 0; s < n; ++s) {
        cycle += nu(s) / m.rate(actions[s]);
        fresh += nu(s) * m.fresh(s, actions[s]);
    }
    sol.omega = 1.0 / cycle;
    sol.mbf = fresh / cycle;
    sol.policy = PerState{rates_of(m, actions)};
    return sol;
}

PolicySolution policy_iteration(const SmdpInstance& inst, const PolicyIterationOptions& options,
                                const std::vector<int>* initial) {
    const SmdpModel& m = *inst.model;
    const int n = m.states(), na = m.actions();
    std::vector<int> current = initial ? *initial : std::vector<int>(n, 0);
    std::vector<int> previous;
    for (int it = 1; it <= options.max_iterations; ++it) {
        PolicySolution sol = evaluate_policy(inst, current);
        std::vector<int> improved(n);
        for (int s = 0; s < n; ++s) {
            std::vector<double> val(na);
            double best = -kInf;
            for (int a = 0; a < na; ++a) {
                val[a] = inst.reward(s, a) - sol.avg_reward * inst.sojourn(a) +
                         m.transition(s, a).dot(sol.relative_values);
                best = std::max(best, val[a]);
            }
            double tol = kTieTol * (1.0 + std::abs(best));
            int pick = 0;
            while (val[pick] < best - tol) ++pick;
            improved[s] = pick;
        }
        if (improved == current) {
            sol.iterations = it;
            return sol;
        }
        previous = current;
        current = improved;
    }
    std::ostringstream os;
    os << "policy iteration did not settle; last two action vectors:";
    for (int v : previous) os << ' ' << v;
    os << " |";
    for (int v : current) os << ' ' << v;
    throw Error(Errc::MaxIterationsExceeded, os.str());
}

PolicySolution solve_constrained(const Chain& chain, const EstimatorSpec& spec, double omega_budget,
                                 const ActionGrid& grid, const ConstrainedOptions& options) {
    return solve_constrained(std::make_shared<const SmdpModel>(chain, spec, grid), omega_budget, options);
}

PolicySolution solve_constrained(std::shared_ptr<const SmdpModel> model, double omega_budget,
                                 const ConstrainedOptions& options) {
    const SmdpModel& m = *model;
    if (!(omega_budget > m.rate(0))) throw Error(Errc::InvalidArgument, "budget must exceed the lowest grid rate");
    if (!(options.eps1 > 0.0) || !(options.eps2 > 0.0))
        throw Error(Errc::InvalidArgument, "tolerances must be positive");
    PolicyIterationOptions pio{options.max_iterations};
    std::vector<std::pair<double, double>> trace;
    auto solve_at = [&](double gamma, const std::vector<int>* warm) {
        PolicySolution s = policy_iteration(SmdpInstance{model, gamma}, pio, warm);
        trace.emplace_back(gamma, s.omega);
        return s;
    };
    auto finish = [&](PolicySolution s) {
        s.trace = trace;
        return s;
    };

    PolicySolution lower = solve_at(0.0, nullptr);
    if (lower.omega <= omega_budget) return finish(lower);

    double gamma_l = 0.0, gamma_u = 1.0;
    PolicySolution upper = solve_at(gamma_u, &lower.actions);
    while (upper.omega > omega_budget) {
        gamma_l = gamma_u;
        lower = upper;
        gamma_u *= 2.0;
        if (gamma_u > kGammaCeiling)
            throw Error(Errc::BracketingFailure, "no multiplier brings the rate under the budget");
        upper = solve_at(gamma_u, &lower.actions);
    }
    while (gamma_u - gamma_l > options.eps1) {
        double gamma = 0.5 * (gamma_l + gamma_u);
        PolicySolution mid = solve_at(gamma, &upper.actions);
        if (std::abs(mid.omega - omega_budget) <= kExactBudget) return finish(mid);
        if (mid.omega > omega_budget) {
            gamma_l = gamma;
            lower = std::move(mid);
        } else {
            gamma_u = gamma;
            upper = std::move(mid);
        }
    }
    if (lower.omega - upper.omega < options.eps2) return finish(upper);

    // Switch states one at a time from the upper (cheaper) policy to the
    // lower-multiplier one until the budget is crossed, then randomize there.
    const int n = m.states();
    std::vector<int> mix = upper.actions;
    int r = -1;
    for (int k = 0; k < n; ++k) {
        mix[k] = lower.actions[k];
        double w = simple_omega(m, mix);
        if (w > omega_budget) {
            r = k;
            break;
        }
    }
    if (r < 0) throw Error(Errc::BracketingFailure, "state sweep never crossed the budget");

    SemiSimple ssp;
    ssp.mu = rates_of(m, mix);
    ssp.r = r;
    ssp.mu_r1 = m.rate(lower.actions[r]);
    ssp.mu_r2 = m.rate(upper.actions[r]);
    double p_lo = 0.0, p_hi = 1.0;
    while (p_hi - p_lo > kProbTol) {
        ssp.p = 0.5 * (p_lo + p_hi);
        if (ssp_metrics(m.chain(), m.estimator(), ssp).omega > omega_budget)
            p_hi = ssp.p;
        else
            p_lo = ssp.p;
    }
    ssp.p = p_lo;
    SspMetrics met = ssp_metrics(m.chain(), m.estimator(), ssp);

    PolicySolution out;
    out.policy = ssp;
    out.actions = mix;
    out.actions[r] = upper.actions[r];
    out.mbf = met.mbf;
    out.omega = met.omega;
    out.gamma = gamma_u;
    out.avg_reward = met.mbf - gamma_u * met.omega;
    out.semi_simple = true;
    out.iterations = upper.iterations;
    return finish(out);
}

}  // namespace qfresh
