#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qfresh/ctmc.hpp"
#include "qfresh/estimators.hpp"
#include "qfresh/smdp.hpp"

namespace qfresh {

struct Source {
    Chain chain;
    EstimatorSpec estimator;
    double weight = 0.0;
    std::string label;
};

struct SourceSet {
    std::vector<Source> sources;
    double budget = 0.0;
    double rho_l = 0.0;
    double rho_u = 0.0;
};

void validate(const SourceSet& set);

struct Allocation {
    Vector rates;
    double objective = 0.0;
    double total = 0.0;
    double theta = 0.0;
    std::vector<double> per_source_mbf;
    bool used_fallback = false;
    // Terminal bracket rate gap exceeded eps2 (possible discontinuity in theta).
    bool discontinuity = false;
    // (theta, total rate) for every multiplier the bisection evaluated.
    std::vector<std::pair<double, double>> trace;
};

// Fixed-rate MBF of one source, memoized on a rate grid.
class SourceCurve {
public:
    SourceCurve(const Source& source, const ActionGrid& grid);

    double mbf(double rate) const;
    double at(int k) const { return values_[k]; }
    const ActionGrid& grid() const { return grid_; }
    const Source& source() const { return *source_; }

private:
    const Source* source_;
    ActionGrid grid_;
    std::vector<double> values_;
};

// argmax of w * mbf(rate) - theta * rate: smallest grid maximizer, then one
// golden-section pass between its grid neighbours.
double per_source_maximizer(const SourceCurve& curve, double theta);
double per_source_maximizer(const Source& source, double theta, const ActionGrid& grid);

struct MultiOptions {
    double eps1 = 1e-5;
    double eps2 = 1e-3;
    int grid_points = 400;
};

Allocation lagrangian_bisection(const SourceSet& set, const MultiOptions& options = {});
Allocation projected_gradient_descent(const SourceSet& set, const Vector& init);

// Euclidean projection onto {x : sum x = total, lo <= x_i <= hi}.
Vector project_bounded_simplex(const Vector& y, double total, double lo, double hi);

Allocation evaluate_allocation(const SourceSet& set, const Vector& rates);
Vector uniform_allocation(const SourceSet& set);
Vector weight_allocation(const SourceSet& set);

}  // namespace qfresh
