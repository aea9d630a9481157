#pragma once

#include <random>
#include <string>
#include <vector>

#include "qfresh/ctmc.hpp"

namespace qfresh {

// fig4, fig5, fig6a, fig6b, fig6c, fig6d, fig9, ring4
std::vector<std::string> preset_names();
Matrix preset_generator(const std::string& name);
Chain preset_chain(const std::string& name);

// Birth-death generator with every rate uniform on [lo, hi].
Matrix random_birth_death(std::mt19937_64& rng, int states, double lo = 0.2, double hi = 2.0);

}  // namespace qfresh
