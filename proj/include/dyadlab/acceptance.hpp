#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dyadlab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  // achieved constants, for pin auditing and CSV emission
  std::vector<std::pair<std::string, double>> achieved;
};

struct Options {
  std::uint64_t seed = 20250808;
  std::string pins_path = "pins.toml";
  std::string out_dir = "out";
  bool quick = false;  // reduced instance counts for smoke runs
};

CriterionResult run_criterion(int id, const Options& opts);
std::vector<CriterionResult> run_all(const Options& opts);

}  // namespace dyadlab::acceptance
