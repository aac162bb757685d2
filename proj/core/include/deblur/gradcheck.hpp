#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace deblur {

struct GradCheckOptions {
  uint64_t seed = 1234;
  double step = 1e-5;        // central-difference step
  double tolerance = 1e-4;   // max relative error allowed per row
  int instances = 50;        // random instances per quotient row; the heavier
                             // feature/stage rows run instances/10 (min 2)
  std::string corrupt;       // fault hook: perturb this row's analytic
                             // gradients so the row must fail
};

// One row of the suite: the largest |analytic − finite-difference| over all
// probed entries and instances, normalized by the larger gradient magnitude.
struct GradCheckRow {
  std::string layer;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Checks every hand-derived backward pass against central finite differences
// of its forward map on small random instances (12×12 images, 5×5 kernels,
// two feature pairs). Rows cover the six quotient gradients, the kernel
// clean-up, the feature stack, and the composed stage.
std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& opts = {});

bool all_pass(const std::vector<GradCheckRow>& rows);

// Fixed-width table for terminal output, one line per row plus a verdict.
std::string format_gradcheck(const std::vector<GradCheckRow>& rows);

}  // namespace deblur
