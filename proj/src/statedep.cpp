#include "qfresh/statedep.hpp"

#include <cmath>

#include "qfresh/error.hpp"
#include "qfresh/smdp.hpp"

namespace qfresh {

namespace {

void check_rates(const Vector& rates, int states) {
    if (rates.size() != states) throw Error(Errc::InvalidArgument, "rate vector length must match the chain");
    for (int i = 0; i < states; ++i)
        if (!(rates(i) > 0.0) || !std::isfinite(rates(i)))
            throw Error(Errc::NonpositiveRate, "sampling rates must be positive and finite");
}

Vector stationary_of_stochastic(const Matrix& p) {
    const int n = static_cast<int>(p.rows());
    Matrix a = p.transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw Error(Errc::SingularSystem, "embedded chain is not irreducible");
    return lu.solve(rhs);
}

double statedep_spectral(const Chain& chain, const EstimatorSpec& spec, const Vector& rates,
                         const Vector& pt) {
    const auto* sd = chain.spectral();
    if (!sd) throw Error(Errc::NotReversible, "closed form requires a reversible chain");
    const int n = chain.size();
    const Vector& pi = sd->pi;
    if (const auto* tm = std::get_if<TauMap>(&spec)) {
        const int is = chain.i_star();
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double c = sd->d(j) + rates(i);
                double u2 = pt(i) * sd->U(i, j) * sd->U(i, j);
                double b = u2 - std::sqrt(pi(is) / pi(i)) * pt(i) * sd->U(i, j) * sd->U(is, j);
                s += rates(i) / c * (u2 - b * std::exp(-c * tm->tau));
            }
        }
        return s;
    }
    PMapSchedule sched;
    if (const auto* pm = std::get_if<PMap>(&spec)) {
        sched = pm->schedule;
    } else if (std::holds_alternative<Martingale>(spec)) {
        sched.tau.assign(n, {0.0, kInf});
        sched.gamma.resize(n);
        for (int i = 0; i < n; ++i) sched.gamma[i] = {i};
    } else {
        throw Error(Errc::RandomizedEstimatorUnsupported, "state-dependent MBF needs a deterministic estimator");
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& tau = sched.tau[i];
        const auto& g = sched.gamma[i];
        for (std::size_t k = 0; k < g.size(); ++k) {
            int v = g[k];
            double w = std::sqrt(pi(v) / pi(i)) * pt(i);
            for (int j = 0; j < n; ++j) {
                double c = sd->d(j) + rates(i);
                s += w * sd->U(i, j) * sd->U(v, j) * rates(i) / c *
                     (std::exp(-c * tau[k]) - std::exp(-c * tau[k + 1]));
            }
        }
    }
    return s;
}

}  // namespace

void validate(const SamplingPolicy& policy, int states) {
    if (const auto* f = std::get_if<FixedRate>(&policy)) {
        if (!(f->mu > 0.0) || !std::isfinite(f->mu)) throw Error(Errc::NonpositiveRate, "mu must be positive");
    } else if (const auto* ps = std::get_if<PerState>(&policy)) {
        check_rates(ps->mu, states);
    } else if (const auto* ss = std::get_if<SemiSimple>(&policy)) {
        if (ss->mu.size() != states) throw Error(Errc::InvalidArgument, "rate vector length must match the chain");
        for (int i = 0; i < states; ++i)
            if (i != ss->r && !(ss->mu(i) > 0.0)) throw Error(Errc::NonpositiveRate, "sampling rates must be positive");
        if (ss->r < 0 || ss->r >= states) throw Error(Errc::InvalidArgument, "randomized state out of range");
        if (!(ss->mu_r1 > 0.0) || !(ss->mu_r2 > 0.0))
            throw Error(Errc::NonpositiveRate, "randomized rates must be positive");
        if (!(ss->p >= 0.0 && ss->p <= 1.0)) throw Error(Errc::InvalidArgument, "p must lie in [0,1]");
    }
}

Vector effective_rates(const SamplingPolicy& policy, int states) {
    validate(policy, states);
    if (const auto* f = std::get_if<FixedRate>(&policy)) return Vector::Constant(states, f->mu);
    if (const auto* ps = std::get_if<PerState>(&policy)) return ps->mu;
    const auto& ss = std::get<SemiSimple>(policy);
    Vector mu = ss.mu;
    mu(ss.r) = ss.p * ss.mu_r1 + (1.0 - ss.p) * ss.mu_r2;
    return mu;
}

Matrix build_joint_generator(const Chain& chain, const Vector& rates) {
    const int n = chain.size();
    check_rates(rates, n);
    const Matrix& q = chain.generator();
    Matrix qm = Matrix::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int row = i * n + j;
            for (int k = 0; k < n; ++k)
                if (k != i) qm(row, k * n + j) = q(i, k);
            if (i != j) {
                qm(row, i * n + i) = rates(j);
                qm(row, row) = -chain.exit_rate(i) - rates(j);
            } else {
                qm(row, row) = -chain.exit_rate(i);
            }
        }
    }
    return qm;
}

JointStationary joint_stationary(const Chain& chain, const Vector& rates) {
    const int n = chain.size();
    Matrix a = build_joint_generator(chain, rates).transpose();
    a.row(n * n - 1).setOnes();
    Vector rhs = Vector::Zero(n * n);
    rhs(n * n - 1) = 1.0;
    Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() > 1e-14)) throw Error(Errc::SingularSystem, "joint balance system is singular");
    Vector flat = lu.solve(rhs);
    JointStationary js;
    js.psi.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) js.psi(i, j) = flat(i * n + j);
    js.pi_tilde = js.psi.colwise().sum().transpose();
    js.omega = js.pi_tilde.dot(rates);
    return js;
}

double mbf_statedep(const Chain& chain, const EstimatorSpec& spec, const Vector& rates, Route route) {
    const int n = chain.size();
    check_rates(rates, n);
    validate(spec, n);
    if (!is_deterministic(spec))
        throw Error(Errc::RandomizedEstimatorUnsupported, "state-dependent MBF needs a deterministic estimator");
    JointStationary js = joint_stationary(chain, rates);
    if (route == Route::Auto && std::holds_alternative<Martingale>(spec)) return js.psi.trace();
    if (route == Route::Spectral || (route == Route::Auto && chain.reversible()))
        return statedep_spectral(chain, spec, rates, js.pi_tilde);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rates(i) * js.pi_tilde(i) * expected_fresh_time(chain, spec, i, rates(i));
    return s;
}

SspMetrics ssp_metrics(const Chain& chain, const EstimatorSpec& spec, const SemiSimple& policy) {
    const int n = chain.size();
    validate(SamplingPolicy{policy}, n);
    if (!is_deterministic(spec))
        throw Error(Errc::RandomizedEstimatorUnsupported, "SSP metrics need a deterministic estimator");
    const int r = policy.r;
    const double p = policy.p, m1 = policy.mu_r1, m2 = policy.mu_r2;

    Matrix emb(n, n);
    Vector reward(n), sojourn(n);
    for (int s = 0; s < n; ++s) {
        if (s == r) continue;
        emb.row(s) = absorption_probs(chain, s, policy.mu(s)).transpose();
        reward(s) = expected_fresh_time(chain, spec, s, policy.mu(s));
        sojourn(s) = 1.0 / policy.mu(s);
    }
    const double f1 = expected_fresh_time(chain, spec, r, m1);
    const double f2 = expected_fresh_time(chain, spec, r, m2);
    emb.row(r) = (p * absorption_probs(chain, r, m1) + (1.0 - p) * absorption_probs(chain, r, m2)).transpose();
    reward(r) = p * f1 + (1.0 - p) * f2;
    sojourn(r) = p / m1 + (1.0 - p) / m2;

    Vector nu = stationary_of_stochastic(emb);
    SspMetrics out;
    double cycle = nu.dot(sojourn);
    out.mbf = nu.dot(reward) / cycle;
    out.omega = 1.0 / cycle;

    Vector mu = effective_rates(SamplingPolicy{policy}, n);
    Vector pt = joint_stationary(chain, mu).pi_tilde;
    double num = mu(r) * pt(r) * (p * f1 + (1.0 - p) * f2);
    for (int i = 0; i < n; ++i)
        if (i != r) num += mu(i) * pt(i) * reward(i);
    double den = (1.0 - pt(r)) * m1 * m2 + pt(r) * mu(r) * (p * m2 + (1.0 - p) * m1);
    out.displayed_mbf = m1 * m2 * num / den;
    out.displayed_omega = m1 * m2 * pt.dot(mu) / den;
    return out;
}

std::pair<double, double> policy_metrics(const Chain& chain, const EstimatorSpec& spec,
                                         const SamplingPolicy& policy) {
    validate(policy, chain.size());
    if (const auto* f = std::get_if<FixedRate>(&policy)) return {evaluate_mbf(chain, spec, f->mu).mbf, f->mu};
    if (const auto* ps = std::get_if<PerState>(&policy))
        return {mbf_statedep(chain, spec, ps->mu), joint_stationary(chain, ps->mu).omega};
    SspMetrics m = ssp_metrics(chain, spec, std::get<SemiSimple>(policy));
    return {m.mbf, m.omega};
}

}  // namespace qfresh
