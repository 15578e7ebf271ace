#include "jlp/likelihood/qmc.hpp"

#include <vector>

#include "jlp/math/normal.hpp"
#include "jlp/math/sobol.hpp"

namespace jlp {

Eigen::MatrixXd qmc_normal_draws(int dim, int n_points,
                                 std::uint64_t scramble_seed) {
  if (dim < 1 || n_points < 1)
    throw DimensionMismatch("qmc_normal_draws needs dim >= 1 and n >= 1");
  SobolSequence seq(dim, scramble_seed);
  seq.skip(1);  // drop the first point (origin-adjacent after the shift)
  Eigen::MatrixXd z(dim, n_points);
  std::vector<double> u(dim);
  for (int r = 0; r < n_points; ++r) {
    seq.next(u.data());
    for (int d = 0; d < dim; ++d) z(d, r) = inv_norm_cdf(u[d]);
  }
  return z;
}

}  // namespace jlp
