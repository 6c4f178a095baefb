#pragma once

#include <string>
#include <vector>

namespace negoplan {

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Hand-derived oracle cases across every module; fast enough for a smoke run.
std::vector<OracleCheck> run_selftest();

}  // namespace negoplan
