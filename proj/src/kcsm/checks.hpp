#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kcsm::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The default theorem-inequality suite behind `kcsm check`: lean versions of
/// the generator, spectral, dynamical, bootstrap and Gibbs consistency
/// checks, each returning one pass/fail row.
std::vector<CheckResult> run_all(std::uint64_t seed = 20240901);

}  // namespace kcsm::checks
