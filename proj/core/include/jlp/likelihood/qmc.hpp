#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace jlp {

// Standard-normal quasi-Monte Carlo draws: scrambled Sobol points mapped
// through the inverse normal CDF. The first Sobol point is skipped. Columns
// are draws, rows are dimensions. The same draw matrix is shared by all
// subjects, scaled by the current Cholesky factor inside the engine.
Eigen::MatrixXd qmc_normal_draws(int dim, int n_points, std::uint64_t scramble_seed);

}  // namespace jlp
