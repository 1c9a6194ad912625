#pragma once

#include "cryptaudit/ir.hpp"

#include <random>
#include <vector>

namespace synthetic {

// Random project IR of 1..max_units units over three files, drawing call
// names from every semantic category and arguments from small shared pools
// so that def-use matches, shared names and shared fingerprints all occur.
std::vector<cryptaudit::IrUnit> random_units(std::mt19937& rng, int max_units = 20);

}  // namespace synthetic
