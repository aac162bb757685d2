#include <iostream>

#include "common.hpp"
#include "deblur/gradcheck.hpp"

namespace deblur::cli {

int run_gradcheck(const RunConfig& cfg) {
  GradCheckOptions opts;
  opts.seed = cfg.gradcheck.seed;
  opts.step = cfg.gradcheck.step;
  opts.tolerance = cfg.gradcheck.tolerance;
  opts.instances = cfg.gradcheck.instances;
  opts.corrupt = cfg.gradcheck.corrupt;

  std::vector<GradCheckRow> rows = run_gradcheck(opts);
  std::cout << format_gradcheck(rows);

  const bool ok = all_pass(rows);
  if (!cfg.run.quiet) {
    double worst = 0.0;
    for (const GradCheckRow& r : rows) worst = std::max(worst, r.max_rel_error);
    emit_event({{"event", "gradcheck_done"},
                {"pass", ok},
                {"layers", rows.size()},
                {"worst_rel_error", worst}});
  }
  return ok ? 0 : 1;
}

}  // namespace deblur::cli
