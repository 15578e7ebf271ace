#include "jlp/model/measurement.hpp"

#include <algorithm>

namespace jlp {

double latent_level(const SubjectRecord& subject, double t, const ModelSpec& spec,
                    const std::vector<std::string>& covariate_names,
                    const Eigen::VectorXd& beta, const Eigen::VectorXd& b) {
  (void)covariate_names;  // covariates are already bound into spec terms
  if (beta.size() != spec.n_fixed() || b.size() != spec.q())
    throw DimensionMismatch("latent_level: coefficient sizes do not match spec");
  double level = 0.0;
  for (int j = 0; j < spec.n_fixed(); ++j)
    level += beta[j] * spec.fixed_terms[j].evaluate(t, subject.covariates);
  for (int j = 0; j < spec.q(); ++j)
    level += b[j] * spec.random_terms[j].evaluate(t, subject.covariates);
  return level;
}

double ordinal_category_prob(int m, double delta, const Eigen::VectorXd& thresholds,
                             double sigma) {
  const int n_thr = static_cast<int>(thresholds.size());
  if (m < 0 || m > n_thr)
    throw ValueOutOfRange("ordinal category " + std::to_string(m) +
                          " outside 0.." + std::to_string(n_thr));
  if (!(sigma > 0.0)) throw DegenerateScale("ordinal sigma must be positive");
  for (int i = 1; i < n_thr; ++i)
    if (!(thresholds[i] > thresholds[i - 1]))
      throw ThresholdOrderViolation("thresholds must be strictly increasing");
  return std::exp(
      ordinal_log_prob_unchecked(m, delta, thresholds.data(), n_thr, sigma));
}

double gaussian_marker_loglik(std::span<const double> values,
                              std::span<const double> deltas, double eta1,
                              double eta2, double sigma) {
  if (values.size() != deltas.size())
    throw DimensionMismatch("gaussian_marker_loglik: values/deltas size mismatch");
  if (!(sigma > 0.0) || eta2 == 0.0)
    throw DegenerateScale("gaussian marker requires sigma > 0 and eta2 != 0");
  // Y = eta1 + eta2 (Delta + eps)  =>  (Y - eta1)/eta2 - Delta ~ N(0, sigma^2),
  // with log-Jacobian -log|eta2| per observation.
  const double inv_eta2 = 1.0 / eta2;
  const double log_jac = -std::log(std::abs(eta2));
  double ll = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double resid = (values[i] - eta1) * inv_eta2 - deltas[i];
    ll += log_norm_pdf(resid / sigma) - std::log(sigma) + log_jac;
  }
  return ll;
}

CurvilinearLink::CurvilinearLink(const MarkerSpec& marker) {
  if (marker.type != MarkerType::Curvilinear)
    throw WrongMarkerNature("CurvilinearLink requires a curvilinear marker");
  affine_ = marker.link_knots.empty();
  if (affine_) {
    n_params_ = 2;
    return;
  }
  const auto& k = marker.link_knots;
  if (k.size() < 2) throw ConfigError("curvilinear link needs >= 2 knots");
  std::span<const double> interior(k.data() + 1, k.size() - 2);
  basis_.emplace_back(3, k.front(), k.back(), interior);
  if (basis_[0].size() > 32)
    throw ConfigError("curvilinear link supports at most 29 interior knots");
  n_params_ = 1 + basis_[0].size();
}

std::pair<double, double> CurvilinearLink::transform(
    double y, const Eigen::VectorXd& eta) const {
  if (eta.size() != n_params_)
    throw DimensionMismatch("curvilinear link: wrong number of eta parameters");
  if (affine_) {
    if (!(eta[1] > 0.0)) throw ConstraintViolation("affine link slope must be > 0");
    return {eta[0] + eta[1] * y, eta[1]};
  }
  const auto& basis = basis_[0];
  if (y < basis.lo() || y > basis.hi())
    throw OutOfSupport("curvilinear value " + std::to_string(y) +
                       " outside link support [" + std::to_string(basis.lo()) +
                       ", " + std::to_string(basis.hi()) + "]");
  const int n = basis.size();
  double ib[32], mb[32];
  basis.integral(y, ib);
  basis.evaluate(y, mb);
  double h = eta[0], dh = 0.0;
  for (int i = 0; i < n; ++i) {
    h += eta[i + 1] * ib[i];
    dh += eta[i + 1] * mb[i];
  }
  if (!(dh > 0.0))
    throw DegenerateScale("curvilinear link has non-positive slope at y=" +
                          std::to_string(y));
  return {h, dh};
}

double marker_loglik(const MarkerSpec& marker, const CurvilinearLink* link,
                     std::span<const double> values, std::span<const double> deltas,
                     const MarkerParams& params) {
  if (values.size() != deltas.size())
    throw DimensionMismatch("marker_loglik: values/deltas size mismatch");
  switch (marker.type) {
    case MarkerType::Gaussian:
      return gaussian_marker_loglik(values, deltas, params.eta[0], params.eta[1],
                                    params.sigma);
    case MarkerType::Curvilinear: {
      if (link == nullptr)
        throw WrongMarkerNature("curvilinear marker needs a CurvilinearLink");
      if (!(params.sigma > 0.0))
        throw DegenerateScale("curvilinear sigma must be positive");
      // H(Y) = Delta + eps, so the density of Y picks up H'(Y).
      double ll = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        auto [h, dh] = link->transform(values[i], params.eta);
        const double resid = h - deltas[i];
        ll += log_norm_pdf(resid / params.sigma) - std::log(params.sigma) +
              std::log(dh);
      }
      return ll;
    }
    case MarkerType::Ordinal: {
      const int n_thr = static_cast<int>(params.eta.size());
      if (n_thr != marker.max_level())
        throw DimensionMismatch("ordinal marker needs levels-1 thresholds");
      if (!(params.sigma > 0.0))
        throw DegenerateScale("ordinal sigma must be positive");
      double ll = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const int m = static_cast<int>(values[i]);
        if (m < 0 || m > n_thr || values[i] != m)
          throw ValueOutOfRange("ordinal observation must be an integer level");
        ll += ordinal_log_prob_unchecked(m, deltas[i], params.eta.data(), n_thr,
                                         params.sigma);
      }
      return ll;
    }
  }
  throw WrongMarkerNature("unknown marker type");
}

}  // namespace jlp
