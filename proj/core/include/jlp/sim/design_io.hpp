#pragma once

#include <string>

#include "jlp/sim/simulate.hpp"

namespace jlp {

// A simulation design file is a model spec plus [simulation] and [truth...]
// sections:
//
//   [simulation]
//   subjects = 300
//   replicates = 50
//   seed = 1
//   horizon = 4            # censoring window
//   spacing = 1            # visit spacing
//   entry_max = 2          # entry ~ U[0, entry_max]; 0 disables
//   horizon_from_entry = true
//   grid_anchored_visits = false
//   covariate sex = bernoulli 0.5   # also: uniform lo hi / normal mean sd
//
//   [truth]
//   beta = 0 1
//   chol = 1 0 0.4472135955         # lower triangle, row-major
//
//   [truth.marker <name>]
//   eta = 0.5 1 1.5
//   sigma = 1
//
//   [truth.cause <name>]
//   baseline = 0.2 5
//   beta =                          # one value per survival covariate
//   alpha = 0.1 0.2
SimDesign parse_sim_design_text(const std::string& text);
SimDesign load_sim_design(const std::string& path);

}  // namespace jlp
