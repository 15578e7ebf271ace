#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "jlp/data/design.hpp"
#include "jlp/errors.hpp"
#include "jlp/math/normal.hpp"
#include "jlp/math/splines.hpp"
#include "jlp/model/parameters.hpp"

namespace jlp {

// Latent process level at time t for one subject: X^L(t)'beta + Z(t)'b.
// No residual error enters here; noise lives in the measurement models.
double latent_level(const SubjectRecord& subject, double t, const ModelSpec& spec,
                    const std::vector<std::string>& covariate_names,
                    const Eigen::VectorXd& beta, const Eigen::VectorXd& b);

// P(Y = m | Delta) under the cumulative probit model: difference of normal
// CDFs between consecutive thresholds (with -inf / +inf end thresholds).
double ordinal_category_prob(int m, double delta, const Eigen::VectorXd& thresholds,
                             double sigma);

// log P(Y = m | Delta), computed in the smaller tail so that extreme Delta
// degrades to -inf instead of losing all precision.
inline double ordinal_log_prob_unchecked(int m, double delta,
                                         const double* thr, int n_thr,
                                         double sigma) {
  const double inv_sigma = 1.0 / sigma;
  // P = Phi(zu) - Phi(zl), zl/zu standardized lower/upper bounds
  double p;
  if (m == 0) {
    p = norm_cdf((thr[0] - delta) * inv_sigma);
  } else if (m == n_thr) {
    p = norm_sf((thr[n_thr - 1] - delta) * inv_sigma);
  } else {
    const double zl = (thr[m - 1] - delta) * inv_sigma;
    const double zu = (thr[m] - delta) * inv_sigma;
    p = (zl + zu > 0.0) ? norm_sf(zl) - norm_sf(zu) : norm_cdf(zu) - norm_cdf(zl);
  }
  // the difference can round to a tiny negative; degrade to -inf, not NaN
  return std::log(std::max(p, 0.0));
}

// Conditional log-likelihood of one Gaussian marker's visits given the
// latent levels at those visits: Y = eta1 + eta2 (Delta + eps).
double gaussian_marker_loglik(std::span<const double> values,
                              std::span<const double> deltas, double eta1,
                              double eta2, double sigma);

// Monotone link for curvilinear markers: H(y) = eta[0] + sum_i eta[i] I_i(y)
// with nonnegative weights on a quadratic I-spline basis (or an affine link
// when no knots are declared).
class CurvilinearLink {
 public:
  explicit CurvilinearLink(const MarkerSpec& marker);

  int n_params() const { return n_params_; }  // intercept + weights
  // returns (transformed value, jacobian dH/dy); jacobian > 0 required
  std::pair<double, double> transform(double y, const Eigen::VectorXd& eta) const;

 private:
  bool affine_;
  int n_params_;
  std::vector<MSplineBasis> basis_;  // empty when affine
};

// Dispatch over the marker nature; `deltas` are the latent levels at the
// marker's visit times. Returns 0 for an empty visit list.
double marker_loglik(const MarkerSpec& marker, const CurvilinearLink* link,
                     std::span<const double> values, std::span<const double> deltas,
                     const MarkerParams& params);

}  // namespace jlp
