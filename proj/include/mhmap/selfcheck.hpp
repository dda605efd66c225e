#pragma once

#include <string>
#include <vector>

#include "mhmap/config.hpp"

namespace mhmap::selfcheck {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Log-concavity grid, complement identity, gradient vs finite
/// differences, FEM row sums and the steady-state residual of the
/// configured estimator model.
std::vector<Check> run_all(const ScenarioConfig& cfg);

}  // namespace mhmap::selfcheck
