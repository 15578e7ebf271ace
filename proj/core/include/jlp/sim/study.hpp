#pragma once

#include <string>
#include <vector>

#include "jlp/estimation/fit.hpp"
#include "jlp/sim/simulate.hpp"

namespace jlp {

struct ParamSummary {
  std::string name;
  double truth = 0.0;
  double mean_est = 0.0;
  double rel_bias_pct = 0.0;  // 100 * (mean_est - truth) / truth; NaN at truth 0
  double emp_sd = 0.0;
  double mean_ase = 0.0;
  double coverage_pct = 0.0;  // Wald 95% CI over converged replicates
};

struct SimStudySummary {
  std::vector<ParamSummary> rows;  // free coordinates, reporting scale
  int replicates = 0;
  int converged = 0;
  int failed = 0;  // non-converged or errored, excluded from the aggregates

  std::string to_csv() const;
};

struct StudyOptions {
  FitOptions fit;
  // when set, each replicate's estimates are stored as
  // <checkpoint_dir>/rep_NNNN.json and reused on rerun
  std::string checkpoint_dir;
  bool verbose = false;  // one progress line per replicate on stderr
};

// Simulate/fit `design.replicates` datasets and aggregate Table-style
// summaries. Replicate r uses data seed derive_seed(master, 2r) and QMC
// scramble seed derive_seed(master, 2r+1), so each replicate is individually
// reproducible. Failed replicates are counted, not fatal.
SimStudySummary run_sim_study(const SimDesign& design, const StudyOptions& opts);

}  // namespace jlp
