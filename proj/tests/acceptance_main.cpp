#include <cstdio>
#include <cstring>
#include <string>

#include "dyadlab/acceptance.hpp"

// Runs every acceptance criterion and prints one pass/fail line each.
// Exit code 0 iff all pass. Flags: --quick, --seed N, --pins PATH, --only K.
int main(int argc, char** argv) {
  dyadlab::acceptance::Options opts;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--quick")) {
      opts.quick = true;
    } else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) {
      opts.seed = std::stoull(argv[++i]);
    } else if (!std::strcmp(argv[i], "--pins") && i + 1 < argc) {
      opts.pins_path = argv[++i];
    } else if (!std::strcmp(argv[i], "--out") && i + 1 < argc) {
      opts.out_dir = argv[++i];
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else {
      std::fprintf(stderr, "unknown flag: %s\n", argv[i]);
      return 2;
    }
  }

  bool all_pass = true;
  auto report = [&](const dyadlab::acceptance::CriterionResult& r) {
    std::printf("%s  criterion %2d  %s  (%s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) all_pass = false;
  };

  try {
    if (only > 0) {
      report(dyadlab::acceptance::run_criterion(only, opts));
    } else {
      for (int id = 1; id <= 11; ++id) report(dyadlab::acceptance::run_criterion(id, opts));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s\n", all_pass ? "ALL ACCEPTANCE CRITERIA PASS" : "ACCEPTANCE FAILURES PRESENT");
  return all_pass ? 0 : 1;
}
