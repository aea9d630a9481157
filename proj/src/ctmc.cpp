#include "qfresh/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qfresh/error.hpp"

namespace qfresh {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kBalanceTol = 1e-9;
constexpr double kMaxTieTol = 1e-12;
constexpr double kRootTol = 1e-9;

bool all_reachable(const Matrix& q, bool reverse) {
    const int n = static_cast<int>(q.rows());
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n; ++v) {
            double rate = reverse ? q(v, u) : q(u, v);
            if (v != u && rate > 0.0 && !seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

// Weights of Poisson(mean) from n = 0 upward, truncated once the remaining
// mass is negligible. Computed in log space so large means do not underflow
// the leading weights into garbage.
std::vector<double> poisson_weights(double mean) {
    std::vector<double> w;
    if (mean <= 0.0) {
        w.push_back(1.0);
        return w;
    }
    const double log_mean = std::log(mean);
    const double upper = mean + 10.0 * std::sqrt(mean) + 30.0;
    const bool direct = mean < 600.0;
    double p = std::exp(-mean);
    for (int n = 0;; ++n) {
        if (direct) {
            if (n > 0) p *= mean / n;
        } else {
            p = std::exp(-mean + n * log_mean - std::lgamma(n + 1.0));
        }
        w.push_back(p);
        if (n > mean && (p < 1e-20 || n > upper)) break;
    }
    return w;
}

Matrix uniformized_kernel(const Chain& chain, double& rate) {
    rate = chain.max_exit_rate();
    const int n = chain.size();
    return Matrix::Identity(n, n) + chain.generator() / rate;
}

}  // namespace

double Chain::max_exit_rate() const { return (-q_.diagonal()).maxCoeff(); }

Chain build_chain(const Matrix& q, std::string label) {
    if (q.rows() != q.cols()) throw Error(Errc::NotSquare, "generator must be square");
    const int n = static_cast<int>(q.rows());
    if (n < 2) throw Error(Errc::TooSmall, "chain needs at least two states");
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (!(q(i, j) >= 0.0)) {
                std::ostringstream os;
                os << "entry (" << i << "," << j << ") = " << q(i, j);
                throw Error(Errc::NegativeOffDiagonal, os.str());
            }
            off += q(i, j);
        }
        if (std::abs(off + q(i, i)) > kRowSumTol * std::max(1.0, off)) {
            std::ostringstream os;
            os << "row " << i << " sums to " << off + q(i, i);
            throw Error(Errc::RowSumViolation, os.str());
        }
    }
    if (!all_reachable(q, false) || !all_reachable(q, true))
        throw Error(Errc::NotIrreducible, "support graph is not strongly connected");

    Chain c;
    c.q_ = q;
    c.label_ = std::move(label);

    Matrix a = q.transpose();
    a.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    c.pi_ = a.fullPivLu().solve(rhs);
    if (c.pi_.minCoeff() <= 0.0)
        throw Error(Errc::SingularSystem, "stationary solve produced a nonpositive entry");
    c.pi_ /= c.pi_.sum();

    double top = c.pi_.maxCoeff();
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (c.pi_(i) >= top - kMaxTieTol) {
            c.i_star_ = i;
            ++count;
        }
    }
    c.unique_max_ = count == 1;

    c.reversible_ = true;
    for (int i = 0; i < n && c.reversible_; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(c.pi_(i) * q(i, j) - c.pi_(j) * q(j, i)) > kBalanceTol) {
                c.reversible_ = false;
                break;
            }
    if (c.reversible_)
        c.spectral_ = std::make_shared<const SpectralDecomposition>(spectral_decomposition(c));
    return c;
}

Matrix transition_matrix(const Chain& chain, double t) {
    if (t < 0.0) throw Error(Errc::NegativeTime, "t must be nonnegative");
    const int n = chain.size();
    double rate = 0.0;
    Matrix k = uniformized_kernel(chain, rate);
    std::vector<double> w = poisson_weights(rate * t);
    Matrix power = Matrix::Identity(n, n);
    Matrix out = w[0] * power;
    for (std::size_t m = 1; m < w.size(); ++m) {
        power = power * k;
        out += w[m] * power;
    }
    return out;
}

Vector transition_row(const Chain& chain, int i, double t) {
    if (t < 0.0) throw Error(Errc::NegativeTime, "t must be nonnegative");
    const int n = chain.size();
    double rate = 0.0;
    Matrix kt = uniformized_kernel(chain, rate).transpose();
    std::vector<double> w = poisson_weights(rate * t);
    Vector v = Vector::Unit(n, i);
    Vector out = w[0] * v;
    for (std::size_t m = 1; m < w.size(); ++m) {
        v = kt * v;
        out += w[m] * v;
    }
    return out;
}

Vector probability_row(const Chain& chain, int i, double t) {
    if (t < 0.0) throw Error(Errc::NegativeTime, "t must be nonnegative");
    if (const auto* sd = chain.spectral()) return sd->transition_row(i, t);
    return transition_row(chain, i, t);
}

SpectralDecomposition spectral_decomposition(const Chain& chain) {
    if (!chain.reversible()) throw Error(Errc::NotReversible, "chain fails detailed balance");
    const int n = chain.size();
    SpectralDecomposition sd;
    sd.pi = chain.stationary();
    sd.sqrt_pi = sd.pi.array().sqrt();
    sd.inv_sqrt_pi = sd.sqrt_pi.array().inverse();
    Matrix m = sd.sqrt_pi.asDiagonal() * chain.generator() * sd.inv_sqrt_pi.asDiagonal();
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw Error(Errc::SingularSystem, "eigensolver failed");
    // Eigenvalues come ascending (most negative first); flip so d ascends.
    sd.U.resize(n, n);
    sd.d.resize(n);
    for (int k = 0; k < n; ++k) {
        sd.d(k) = -es.eigenvalues()(n - 1 - k);
        sd.U.col(k) = es.eigenvectors().col(n - 1 - k);
    }
    sd.d(0) = 0.0;
    sd.U.col(0) = sd.sqrt_pi;
    for (int k = 1; k < n; ++k) sd.d(k) = std::max(sd.d(k), 0.0);
    sd.a.resize(n);
    for (int k = 0; k < n; ++k) sd.a(k) = (sd.pi.array() * sd.U.col(k).array().square()).sum();
    return sd;
}

double SpectralDecomposition::transition(int i, int j, double t) const {
    double s = 0.0;
    for (int k = 0; k < d.size(); ++k) s += U(i, k) * U(j, k) * std::exp(-d(k) * t);
    return sqrt_pi(j) * inv_sqrt_pi(i) * s;
}

Vector SpectralDecomposition::transition_row(int i, double t) const {
    Vector decay = (-d * t).array().exp();
    Vector coef = U.row(i).transpose().cwiseProduct(decay);
    Vector row = U * coef;
    return row.cwiseProduct(sqrt_pi) * inv_sqrt_pi(i);
}

Vector SpectralDecomposition::discounted_row_integral(int i, double lo, double hi, double mu) const {
    const int n = static_cast<int>(d.size());
    if (!(hi > lo)) return Vector::Zero(n);
    Vector coef(n);
    for (int k = 0; k < n; ++k) {
        double c = d(k) + mu;
        coef(k) = U(i, k) * (std::exp(-c * lo) - std::exp(-c * hi)) / c;
    }
    Vector row = U * coef;
    return row.cwiseProduct(sqrt_pi) * inv_sqrt_pi(i);
}

int argmax_lowest(const Vector& v) {
    int best = 0;
    for (int j = 1; j < v.size(); ++j)
        if (v(j) > v(best)) best = j;
    return best;
}

int map_estimate(const Chain& chain, int i, double t) {
    return argmax_lowest(probability_row(chain, i, t));
}

int MapStructure::value_at(int i, double t) const {
    const auto& pts = tau_star[i];
    auto it = std::upper_bound(pts.begin(), pts.end(), t);
    return map_value[i][static_cast<std::size_t>(it - pts.begin())];
}

MapStructure map_structure(const Chain& chain, double horizon, double grid_step) {
    if (!(horizon > 0.0)) throw Error(Errc::InvalidArgument, "horizon must be positive");
    if (grid_step <= 0.0) grid_step = horizon / 2000.0;
    const int n = chain.size();
    const int cells = std::max(1, static_cast<int>(std::ceil(horizon / grid_step - 1e-9)));
    MapStructure ms;
    ms.tau_star.resize(n);
    ms.map_value.resize(n);
    ms.i_star = chain.i_star();
    ms.unique_max = chain.unique_max();
    ms.horizon = horizon;

    for (int i = 0; i < n; ++i) {
        auto arg = [&](double t) { return map_estimate(chain, i, t); };
        int cur = i;
        ms.map_value[i].push_back(cur);
        double prev = 0.0;
        for (int k = 1; k <= cells; ++k) {
            double tk = std::min(horizon, k * grid_step);
            int at = arg(tk);
            double lo = prev;
            while (at != cur) {
                double hi = tk;
                int after = at;
                while (hi - lo > kRootTol) {
                    double mid = 0.5 * (lo + hi);
                    int m = arg(mid);
                    if (m == cur) {
                        lo = mid;
                    } else {
                        hi = mid;
                        after = m;
                    }
                }
                ms.tau_star[i].push_back(0.5 * (lo + hi));
                cur = after;
                ms.map_value[i].push_back(cur);
                lo = hi;
            }
            prev = tk;
        }
        if (!ms.tau_star[i].empty())
            ms.global_tau_star = std::max(ms.global_tau_star, ms.tau_star[i].back());
    }
    return ms;
}

double suggested_map_horizon(const Chain& chain) {
    const int n = chain.size();
    const Vector& pi = chain.stationary();
    if (const auto* sd = chain.spectral(); sd && chain.unique_max()) {
        double second = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != chain.i_star()) second = std::max(second, pi(j));
        double gap = pi(chain.i_star()) - second;
        double c = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 1; k < n; ++k) s += std::abs(sd->U(i, k) * sd->U(j, k));
                c = std::max(c, std::sqrt(pi(j) / pi(i)) * s);
            }
        double t = std::log(2.0 * c / gap) / sd->d(1);
        return std::max(1.05 * t, 1e-3);
    }
    Eigen::EigenSolver<Matrix> es(chain.generator(), false);
    double decay = kInf;
    for (int k = 0; k < n; ++k) {
        double re = -es.eigenvalues()(k).real();
        if (std::abs(es.eigenvalues()(k)) > 1e-9) decay = std::min(decay, re);
    }
    return std::log(1e6) / decay;
}

double mean_sojourn_time(const Chain& chain) {
    const Vector& pi = chain.stationary();
    double rate = 0.0;
    for (int i = 0; i < chain.size(); ++i) rate += pi(i) * chain.exit_rate(i);
    return 1.0 / rate;
}

}  // namespace qfresh
