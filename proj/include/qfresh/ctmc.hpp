#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qfresh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Eigenstructure of a reversible generator. Column k of U is the k-th
// eigenvector of the symmetrized generator, d(k) the decay rate (d(0) = 0).
struct SpectralDecomposition {
    Matrix U;
    Vector d;
    Vector a;
    Vector pi;
    Vector sqrt_pi;
    Vector inv_sqrt_pi;

    double transition(int i, int j, double t) const;
    Vector transition_row(int i, double t) const;
    // Row i of  int_lo^hi P(t) e^{-mu t} dt ; hi may be +inf.
    Vector discounted_row_integral(int i, double lo, double hi, double mu) const;
};

class Chain {
public:
    int size() const { return static_cast<int>(q_.rows()); }
    const Matrix& generator() const { return q_; }
    const Vector& stationary() const { return pi_; }
    bool reversible() const { return reversible_; }
    const std::string& label() const { return label_; }
    double exit_rate(int i) const { return -q_(i, i); }
    double max_exit_rate() const;

    // Largest-index maximizer of pi; unique_max() reports strict uniqueness.
    int i_star() const { return i_star_; }
    bool unique_max() const { return unique_max_; }

    // Only set for reversible chains.
    const SpectralDecomposition* spectral() const { return spectral_.get(); }

private:
    friend Chain build_chain(const Matrix& q, std::string label);

    Matrix q_;
    Vector pi_;
    bool reversible_ = false;
    std::string label_;
    int i_star_ = 0;
    bool unique_max_ = true;
    std::shared_ptr<const SpectralDecomposition> spectral_;
};

Chain build_chain(const Matrix& q, std::string label = {});

// Uniformization with Poisson truncation below 1e-12.
Matrix transition_matrix(const Chain& chain, double t);
Vector transition_row(const Chain& chain, int i, double t);

// Spectral row for reversible chains, uniformization otherwise.
Vector probability_row(const Chain& chain, int i, double t);

SpectralDecomposition spectral_decomposition(const Chain& chain);

int argmax_lowest(const Vector& v);
int map_estimate(const Chain& chain, int i, double t);

struct MapStructure {
    // tau_star[i] holds the increasing change points from start state i;
    // map_value[i][k] is the MAP value on [tau_star[i][k-1], tau_star[i][k]).
    std::vector<std::vector<double>> tau_star;
    std::vector<std::vector<int>> map_value;
    double global_tau_star = 0.0;
    int i_star = 0;
    bool unique_max = true;
    double horizon = 0.0;

    int value_at(int i, double t) const;
};

// grid_step <= 0 selects horizon / 2000.
MapStructure map_structure(const Chain& chain, double horizon, double grid_step = 0.0);

// Horizon past which the MAP estimate is provably i_star (reversible chains
// with a unique maximum), or a decay-based heuristic otherwise.
double suggested_map_horizon(const Chain& chain);

// Long-run average time between source jumps.
double mean_sojourn_time(const Chain& chain);

}  // namespace qfresh
