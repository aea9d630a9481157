#include "qfresh/freshness.hpp"

#include <algorithm>
#include <cmath>

#include "qfresh/error.hpp"

namespace qfresh {

namespace {

constexpr double kQuadTol = 1e-12;
constexpr double kTailTol = 1e-13;
constexpr int kMaxDepth = 40;

void check_rate(double mu) {
    if (!(mu > 0.0)) throw Error(Errc::NonpositiveRate, "mu must be positive");
}

const SpectralDecomposition& need_spectral(const Chain& chain) {
    const auto* sd = chain.spectral();
    if (!sd) throw Error(Errc::NotReversible, "spectral route requires a reversible chain");
    return *sd;
}

bool use_spectral(const Chain& chain, Route route) {
    if (route == Route::Spectral) {
        need_spectral(chain);
        return true;
    }
    return route == Route::Auto && chain.reversible();
}

Eigen::PartialPivLU<Matrix> resolvent(const Chain& chain, double shift) {
    const int n = chain.size();
    Matrix a = shift * Matrix::Identity(n, n) - chain.generator().transpose();
    Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() > 1e-14)) throw Error(Errc::SingularSystem, "resolvent is numerically singular");
    return lu;
}

struct Stage {
    double lo;
    double hi;
    int value;
};

std::vector<Stage> stages_for(const Chain& chain, const EstimatorSpec& spec, int i) {
    if (const auto* t = std::get_if<TauMap>(&spec)) {
        return {{0.0, t->tau, i}, {t->tau, kInf, chain.i_star()}};
    }
    if (const auto* p = std::get_if<PMap>(&spec)) {
        const auto& tau = p->schedule.tau[i];
        const auto& g = p->schedule.gamma[i];
        std::vector<Stage> out;
        for (std::size_t k = 0; k < g.size(); ++k) out.push_back({tau[k], tau[k + 1], g[k]});
        return out;
    }
    if (std::holds_alternative<Martingale>(spec)) return {{0.0, kInf, i}};
    throw Error(Errc::RandomizedEstimatorUnsupported,
                "fresh-time integral needs a deterministic estimator trajectory");
}

// Vector-valued adaptive Simpson with Richardson correction.
class Simpson {
public:
    Simpson(const Chain& chain, int i, double mu) : chain_(chain), i_(i), mu_(mu) {}

    Vector integrate(double a, double b, double tol) {
        Vector fa = f(a), fb = f(b);
        double m = 0.5 * (a + b);
        Vector fm = f(m);
        Vector whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        return refine(a, b, fa, fm, fb, whole, tol, 0);
    }

private:
    Vector f(double t) const { return transition_row(chain_, i_, t) * std::exp(-mu_ * t); }

    Vector refine(double a, double b, const Vector& fa, const Vector& fm, const Vector& fb,
                  const Vector& whole, double tol, int depth) {
        double m = 0.5 * (a + b);
        Vector flm = f(0.5 * (a + m));
        Vector frm = f(0.5 * (m + b));
        Vector left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        Vector right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        Vector both = left + right;
        double err = (both - whole).cwiseAbs().maxCoeff();
        if (depth >= kMaxDepth || err <= 15.0 * tol) return both + (both - whole) / 15.0;
        return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }

    const Chain& chain_;
    int i_;
    double mu_;
};

}  // namespace

Vector discounted_occupancy_quadrature(const Chain& chain, int i, double lo, double hi, double mu) {
    check_rate(mu);
    const int n = chain.size();
    if (!(hi > lo)) return Vector::Zero(n);
    // Beyond lo + L the remaining mass is at most e^{-mu L}/mu.
    double span = std::log(1.0 / (mu * kTailTol)) / mu;
    double end = std::min(hi, lo + std::max(span, 0.0));
    if (!(end > lo)) return Vector::Zero(n);
    double scale = std::max(chain.max_exit_rate(), mu);
    int panels = static_cast<int>(std::clamp(std::ceil((end - lo) * scale), 4.0, 4096.0));
    double width = (end - lo) / panels;
    Simpson simpson(chain, i, mu);
    Vector total = Vector::Zero(n);
    for (int p = 0; p < panels; ++p) {
        double a = lo + p * width;
        double b = p + 1 == panels ? end : a + width;
        total += simpson.integrate(a, b, kQuadTol / panels);
    }
    return total;
}

Vector discounted_occupancy(const Chain& chain, int i, double lo, double hi, double mu, Route route) {
    check_rate(mu);
    if (use_spectral(chain, route)) return chain.spectral()->discounted_row_integral(i, lo, hi, mu);
    return discounted_occupancy_quadrature(chain, i, lo, hi, mu);
}

double mbf_exponential(const Chain& chain, double mu, double lambda, Route route) {
    check_rate(mu);
    if (!(lambda >= 0.0)) throw Error(Errc::InvalidArgument, "lambda must be >= 0");
    const double tail = lambda / (mu + lambda) * chain.stationary()(chain.i_star());
    if (use_spectral(chain, route)) {
        const auto& sd = *chain.spectral();
        double s = 0.0;
        for (int k = 0; k < sd.d.size(); ++k) s += sd.a(k) * mu / (sd.d(k) + mu + lambda);
        return s + tail;
    }
    auto lu = resolvent(chain, mu + lambda);
    Matrix x = lu.solve(Matrix(chain.stationary().asDiagonal()));
    return mu * x.trace() + tail;
}

double mbf_martingale(const Chain& chain, double mu) { return mbf_exponential(chain, mu, 0.0); }

double mbf_erlang(const Chain& chain, double mu, int gamma, double lambda, Route route) {
    check_rate(mu);
    if (gamma < 2) throw Error(Errc::InvalidArgument, "Erlang stage count must be >= 2");
    if (!(lambda > 0.0)) throw Error(Errc::InvalidArgument, "lambda must be > 0");
    const double lg = lambda * gamma;
    const double pi_star = chain.stationary()(chain.i_star());
    if (use_spectral(chain, route)) {
        const auto& sd = *chain.spectral();
        double s = 0.0;
        for (int k = 0; k < sd.d.size(); ++k) {
            double c = sd.d(k) + mu;
            s += sd.a(k) * mu / c * (1.0 - std::pow(lg / (c + lg), gamma - 1));
        }
        return s + std::pow(lg / (mu + lg), gamma - 1) * pi_star;
    }
    // x_k = (lg)^{k-1} (resolvent)^k Pi, built by repeated solves.
    auto lu = resolvent(chain, mu + lg);
    Matrix x = lu.solve(Matrix(chain.stationary().asDiagonal()));
    double s = x.trace();
    for (int k = 2; k < gamma; ++k) {
        x = lg * lu.solve(x);
        s += x.trace();
    }
    return mu * s + std::pow(lg / (mu + lg), gamma - 1) * pi_star;
}

double mbf_tau_map(const Chain& chain, double mu, double tau, Route route) {
    check_rate(mu);
    if (!(tau >= 0.0)) throw Error(Errc::InvalidArgument, "tau must be >= 0");
    if (use_spectral(chain, route)) {
        const auto& sd = *chain.spectral();
        double s = 0.0;
        for (int k = 0; k < sd.d.size(); ++k) {
            double c = sd.d(k) + mu;
            s += sd.a(k) * mu / c * (1.0 - std::exp(-c * tau));
        }
        return s + std::exp(-mu * tau) * chain.stationary()(chain.i_star());
    }
    return mbf_general(chain, TauMap{tau}, mu, Route::General);
}

double mbf_pmap(const Chain& chain, double mu, const PMapSchedule& schedule, Route route) {
    check_rate(mu);
    validate(PMap{schedule}, chain.size());
    if (use_spectral(chain, route)) {
        const auto& sd = *chain.spectral();
        const int n = chain.size();
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto& tau = schedule.tau[i];
            const auto& g = schedule.gamma[i];
            for (std::size_t k = 0; k < g.size(); ++k) {
                int v = g[k];
                double w = std::sqrt(sd.pi(i) * sd.pi(v));
                for (int j = 0; j < n; ++j) {
                    double c = sd.d(j) + mu;
                    s += w * sd.U(i, j) * sd.U(v, j) * mu / c *
                         (std::exp(-c * tau[k]) - std::exp(-c * tau[k + 1]));
                }
            }
        }
        return s;
    }
    return mbf_general(chain, PMap{schedule}, mu, Route::General);
}

double expected_fresh_time(const Chain& chain, const EstimatorSpec& spec, int i, double mu, Route route) {
    check_rate(mu);
    double total = 0.0;
    for (const Stage& st : stages_for(chain, spec, i)) {
        if (!(st.hi > st.lo)) continue;
        total += discounted_occupancy(chain, i, st.lo, st.hi, mu, route)(st.value);
    }
    return total;
}

double mbf_general(const Chain& chain, const EstimatorSpec& spec, double mu, Route route) {
    check_rate(mu);
    validate(spec, chain.size());
    const Vector& pi = chain.stationary();
    double s = 0.0;
    for (int i = 0; i < chain.size(); ++i) s += pi(i) * expected_fresh_time(chain, spec, i, mu, route);
    return mu * s;
}

std::pair<double, double> verify_martingale_vs_taustar(const Chain& chain, double mu) {
    check_rate(mu);
    if (!chain.unique_max()) throw Error(Errc::NoUniqueMaximum, "stationary maximum is tied");
    MapStructure ms = map_structure(chain, suggested_map_horizon(chain));
    return {mbf_martingale(chain, mu), mbf_tau_map(chain, mu, ms.global_tau_star)};
}

FreshnessReport evaluate_mbf(const Chain& chain, const EstimatorSpec& spec, double mu) {
    validate(spec, chain.size());
    FreshnessReport r;
    r.method = "closed";
    if (std::holds_alternative<Martingale>(spec)) {
        r.mbf = mbf_martingale(chain, mu);
    } else if (const auto* e = std::get_if<Exponential>(&spec)) {
        r.mbf = mbf_exponential(chain, mu, e->lambda);
    } else if (const auto* e = std::get_if<Erlang>(&spec)) {
        r.mbf = mbf_erlang(chain, mu, e->gamma, e->lambda);
    } else if (const auto* e = std::get_if<TauMap>(&spec)) {
        r.mbf = mbf_tau_map(chain, mu, e->tau);
        if (!chain.reversible()) r.method = "general";
    } else if (const auto* e = std::get_if<PMap>(&spec)) {
        r.mbf = mbf_pmap(chain, mu, e->schedule);
        if (!chain.reversible()) r.method = "general";
    }
    return r;
}

}  // namespace qfresh
