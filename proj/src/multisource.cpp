#include "qfresh/multisource.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "qfresh/error.hpp"
#include "qfresh/freshness.hpp"
#include "qfresh/parallel.hpp"

namespace qfresh {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr double kExactBudget = 1e-12;
constexpr double kThetaCeiling = 1e15;
constexpr double kPgdStep = 1e-7;
constexpr int kPgdIterations = 2000;

double source_mbf(const Source& s, double rate) { return evaluate_mbf(s.chain, s.estimator, rate).mbf; }

}  // namespace

void validate(const SourceSet& set) {
    if (set.sources.empty()) throw Error(Errc::InvalidArgument, "need at least one source");
    double w = 0.0;
    for (const auto& s : set.sources) {
        if (!(s.weight >= 0.0)) throw Error(Errc::InvalidArgument, "weights must be nonnegative");
        validate(s.estimator, s.chain.size());
        w += s.weight;
    }
    if (std::abs(w - 1.0) > 1e-9) throw Error(Errc::InvalidArgument, "weights must sum to 1");
    if (!(set.rho_l > 0.0) || !(set.rho_u >= set.rho_l))
        throw Error(Errc::InvalidArgument, "rate bounds must satisfy 0 < lower <= upper");
    if (!(set.budget > set.rho_l)) throw Error(Errc::InvalidArgument, "budget must exceed the lower rate bound");
    if (set.sources.size() * set.rho_l > set.budget)
        throw Error(Errc::InfeasibleBounds, "budget is below sources x lower rate bound");
}

SourceCurve::SourceCurve(const Source& source, const ActionGrid& grid)
    : source_(&source), grid_(grid), values_(grid.rates.size()) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] = source_mbf(source, grid_.rates[k]);
}

double SourceCurve::mbf(double rate) const { return source_mbf(*source_, rate); }

double per_source_maximizer(const SourceCurve& curve, double theta) {
    if (!(theta >= 0.0)) throw Error(Errc::InvalidArgument, "theta must be nonnegative");
    const auto& rates = curve.grid().rates;
    const double w = curve.source().weight;
    const int n = static_cast<int>(rates.size());
    int best = 0;
    double best_val = w * curve.at(0) - theta * rates[0];
    for (int k = 1; k < n; ++k) {
        double v = w * curve.at(k) - theta * rates[k];
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    if (n < 3) return rates[best];
    double a = rates[std::max(best - 1, 0)];
    double b = rates[std::min(best + 1, n - 1)];
    auto obj = [&](double x) { return w * curve.mbf(x) - theta * x; };
    double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
    double f1 = obj(x1), f2 = obj(x2);
    while (b - a > 1e-12 * std::max(1.0, b)) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = obj(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = obj(x2);
        }
    }
    double x = 0.5 * (a + b);
    return obj(x) > best_val ? x : rates[best];
}

double per_source_maximizer(const Source& source, double theta, const ActionGrid& grid) {
    return per_source_maximizer(SourceCurve(source, grid), theta);
}

Allocation evaluate_allocation(const SourceSet& set, const Vector& rates) {
    Allocation a;
    a.rates = rates;
    a.total = rates.sum();
    for (std::size_t i = 0; i < set.sources.size(); ++i) {
        double m = source_mbf(set.sources[i], rates(static_cast<int>(i)));
        a.per_source_mbf.push_back(m);
        a.objective += set.sources[i].weight * m;
    }
    return a;
}

Vector uniform_allocation(const SourceSet& set) {
    const int c = static_cast<int>(set.sources.size());
    return Vector::Constant(c, set.budget / c);
}

Vector weight_allocation(const SourceSet& set) {
    Vector r(set.sources.size());
    for (std::size_t i = 0; i < set.sources.size(); ++i) r(static_cast<int>(i)) = set.sources[i].weight * set.budget;
    return r;
}

Vector project_bounded_simplex(const Vector& y, double total, double lo, double hi) {
    const int n = static_cast<int>(y.size());
    if (n * lo > total || n * hi < total)
        throw Error(Errc::InfeasibleBounds, "no point of the box meets the budget");
    auto filled = [&](double nu) { return (y.array() - nu).cwiseMax(lo).cwiseMin(hi).sum(); };
    double a = y.minCoeff() - hi, b = y.maxCoeff() - lo;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (filled(mid) > total)
            a = mid;
        else
            b = mid;
    }
    Vector x = (y.array() - 0.5 * (a + b)).cwiseMax(lo).cwiseMin(hi);
    // Spread the rounding residue over the coordinates not pinned at a bound.
    double gap = total - x.sum();
    int free = 0;
    for (int i = 0; i < n; ++i)
        if (x(i) > lo && x(i) < hi) ++free;
    if (free > 0)
        for (int i = 0; i < n; ++i)
            if (x(i) > lo && x(i) < hi) x(i) += gap / free;
    return x;
}

Allocation projected_gradient_descent(const SourceSet& set, const Vector& init) {
    validate(set);
    const int c = static_cast<int>(set.sources.size());
    auto objective = [&](const Vector& x) {
        double f = 0.0;
        for (int i = 0; i < c; ++i) f += set.sources[i].weight * source_mbf(set.sources[i], x(i));
        return f;
    };
    Vector x = project_bounded_simplex(init, set.budget, set.rho_l, set.rho_u);
    double fx = objective(x);
    double alpha = 1.0;
    for (int it = 0; it < kPgdIterations; ++it) {
        Vector g(c);
        for (int i = 0; i < c; ++i) {
            double h = 1e-5 * x(i);
            const Source& s = set.sources[i];
            g(i) = s.weight * (source_mbf(s, x(i) + h) - source_mbf(s, x(i))) / h;
        }
        alpha = std::min(alpha * 2.0, 1e6);
        Vector next;
        double fn = fx;
        bool moved = false;
        while (alpha > 1e-14) {
            next = project_bounded_simplex(x + alpha * g, set.budget, set.rho_l, set.rho_u);
            fn = objective(next);
            if (fn >= fx + 1e-4 * g.dot(next - x)) {
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) break;
        double step = (next - x).norm();
        x = next;
        fx = fn;
        if (step < kPgdStep) break;
    }
    Allocation out = evaluate_allocation(set, x);
    out.used_fallback = true;
    return out;
}

Allocation lagrangian_bisection(const SourceSet& set, const MultiOptions& options) {
    validate(set);
    const int c = static_cast<int>(set.sources.size());
    ActionGrid grid = ActionGrid::log_spaced(set.rho_l, set.rho_u, options.grid_points);
    std::vector<std::unique_ptr<SourceCurve>> curves(c);
    parallel_for(c, [&](int i) { curves[i] = std::make_unique<SourceCurve>(set.sources[i], grid); });

    std::vector<std::pair<double, double>> trace;
    auto solve_at = [&](double theta) {
        Vector r(c);
        parallel_for(c, [&](int i) { r(i) = per_source_maximizer(*curves[i], theta); });
        trace.emplace_back(theta, r.sum());
        return r;
    };
    auto finish = [&](const Vector& r, double theta) {
        Allocation a = evaluate_allocation(set, r);
        a.theta = theta;
        a.trace = trace;
        return a;
    };

    Vector lower = solve_at(0.0);
    if (lower.sum() <= set.budget) return finish(lower, 0.0);

    double theta_l = 0.0, theta_u = 1.0;
    Vector upper = solve_at(theta_u);
    while (upper.sum() > set.budget) {
        theta_l = theta_u;
        lower = upper;
        theta_u *= 2.0;
        if (theta_u > kThetaCeiling) throw Error(Errc::BracketingFailure, "no multiplier meets the budget");
        upper = solve_at(theta_u);
    }
    while (theta_u - theta_l > options.eps1) {
        double theta = 0.5 * (theta_l + theta_u);
        Vector mid = solve_at(theta);
        if (std::abs(mid.sum() - set.budget) <= kExactBudget) return finish(mid, theta);
        if (mid.sum() > set.budget) {
            theta_l = theta;
            lower = mid;
        } else {
            theta_u = theta;
            upper = mid;
        }
    }
    if (lower.sum() - upper.sum() < options.eps2) return finish(upper, theta_u);

    Allocation best = finish(upper, theta_u);
    best.discontinuity = true;
    Allocation pgd = projected_gradient_descent(set, upper);
    best.used_fallback = true;
    if (pgd.objective > best.objective) {
        pgd.theta = theta_u;
        pgd.trace = trace;
        pgd.discontinuity = true;
        pgd.used_fallback = true;
        return pgd;
    }
    return best;
}

}  // namespace qfresh
