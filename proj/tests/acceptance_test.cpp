// Runs every acceptance criterion and prints one line per criterion.
// Tolerances live in the suite rows (include/rollkit/verify_suite.hpp).

#include "rollkit/verify_suite.hpp"

#include <cstdio>

int main() {
  rollkit::SuiteOptions opt;
  opt.seed = rollkit::seed_from_env();
  const auto rows = rollkit::VerificationSuite(opt).run();
  int failed = 0;
  for (const auto& r : rows) {
    std::printf("criterion %2d %-30s %s  observed: %s  (tolerance: %s, %.2f s)\n", r.id, r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.observed.c_str(), r.tolerance.c_str(), r.seconds);
    if (!r.pass) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", rows.size(), failed);
  return failed == 0 ? 0 : 1;
}
