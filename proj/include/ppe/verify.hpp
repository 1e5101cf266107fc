#pragma once

#include <string>
#include <vector>

namespace ppe {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;  ///< measured quantity
  double limit = 0.0;  ///< threshold it was compared against
  std::string detail;
};

/// Quick numerical self-checks on a small instance (seconds): operator
/// unitarity and composition, split-step limits, synthetic recovery, the
/// offset identity, SER theory against Monte Carlo and fit recovery.
std::vector<CheckResult> run_invariant_suite(unsigned threads = 1);

}  // namespace ppe
