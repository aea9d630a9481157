#include "qfresh/presets.hpp"

#include <map>

#include "qfresh/error.hpp"

namespace qfresh {

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int n = static_cast<int>(rows.size());
    Matrix m(n, n);
    int i = 0;
    for (const auto& r : rows) {
        int j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

const std::map<std::string, Matrix>& table() {
    static const std::map<std::string, Matrix> presets = {
        {"fig4", from_rows({{-1.70, 0.41, 0.53, 0.76},
                            {1.03, -2.17, 0.83, 0.31},
                            {1.11, 0.78, -2.74, 0.85},
                            {1.15, 1.13, 0.71, -2.99}})},
        {"fig5", from_rows({{-3.99, 0.77, 0.69, 1.29, 1.24},
                            {0.70, -0.70, 0, 0, 0},
                            {0.84, 0, -0.84, 0, 0},
                            {0.71, 0, 0, -0.71, 0},
                            {0.48, 0, 0, 0, -0.48}})},
        {"fig6a", from_rows({{-0.79, 0.79, 0, 0},
                             {1.71, -1.97, 0.26, 0},
                             {0, 1.08, -2.73, 1.65},
                             {0, 0, 0.62, -0.62}})},
        // Third row as printed sums to 0.008; its diagonal is set to the
        // negated off-diagonal sum so the row is a valid generator row.
        {"fig6b", from_rows({{-0.62, 0.62, 0, 0, 0, 0},
                             {0.63, -1.58, 0.95, 0, 0, 0},
                             {0, 1.748, -3.558, 1.81, 0, 0},
                             {0, 0, 0.47, -2.22, 1.75, 0},
                             {0, 0, 0, 1.15, -1.88, 0.73},
                             {0, 0, 0, 0, 1.91, -1.91}})},
        {"fig6c", from_rows({{-2.41, 1.25, 0.50, 0.66},
                             {0.36, -0.36, 0, 0},
                             {1.20, 0, -1.20, 0},
                             {1.18, 0, 0, -1.18}})},
        {"fig6d", from_rows({{-4.83, 1.24, 0.83, 1.25, 0.88, 0.63},
                             {1.08, -1.08, 0, 0, 0, 0},
                             {0.31, 0, -0.31, 0, 0, 0},
                             {0.99, 0, 0, -0.99, 0, 0},
                             {1.01, 0, 0, 0, -1.01, 0},
                             {1.17, 0, 0, 0, 0, -1.17}})},
        {"fig9", from_rows({{-1.02, 1.02, 0, 0},
                            {1.05, -2.21, 1.16, 0},
                            {0, 0.61, -2.18, 1.57},
                            {0, 0, 0.26, -0.26}})},
        // One-directional 4-cycle with alternating rates.
        {"ring4", from_rows({{-1, 1, 0, 0},
                             {0, -0.75, 0.75, 0},
                             {0, 0, -1, 1},
                             {0.75, 0, 0, -0.75}})},
    };
    return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"fig4", "fig5", "fig6a", "fig6b", "fig6c", "fig6d", "fig9", "ring4"};
}

Matrix preset_generator(const std::string& name) {
    auto it = table().find(name);
    if (it == table().end()) throw Error(Errc::ParseError, "unknown preset '" + name + "'");
    return it->second;
}

Chain preset_chain(const std::string& name) { return build_chain(preset_generator(name), name); }

Matrix random_birth_death(std::mt19937_64& rng, int states, double lo, double hi) {
    if (states < 2) throw Error(Errc::TooSmall, "birth-death chain needs at least two states");
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix q = Matrix::Zero(states, states);
    for (int i = 0; i + 1 < states; ++i) {
        q(i, i + 1) = u(rng);
        q(i + 1, i) = u(rng);
    }
    for (int i = 0; i < states; ++i) q(i, i) = -(q.row(i).sum() - q(i, i));
    return q;
}

}  // namespace qfresh
