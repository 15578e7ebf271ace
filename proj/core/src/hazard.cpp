#include "jlp/model/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jlp {

BaselineHazard::BaselineHazard(const CauseSpec& cause)
    : family_(cause.family), n_params_(cause.baseline_param_count()) {
  switch (family_) {
    case BaselineFamily::Weibull:
      break;
    case BaselineFamily::PiecewiseConstant:
      cuts_ = cause.cuts;
      for (std::size_t i = 1; i < cuts_.size(); ++i)
        if (!(cuts_[i] > cuts_[i - 1]))
          throw ConfigError("piecewise cuts must be strictly increasing");
      if (!cuts_.empty() && !(cuts_.front() > 0.0))
        throw ConfigError("piecewise cuts must be positive");
      break;
    case BaselineFamily::MSplines: {
      const auto& k = cause.knots;
      if (k.size() < 2) throw ConfigError("mspline baseline needs >= 2 knots");
      std::span<const double> interior(k.data() + 1, k.size() - 2);
      basis_.emplace_back(4, k.front(), k.back(), interior);
      if (basis_[0].size() > 64)
        throw ConfigError("mspline baseline supports at most 60 interior knots");
      if (basis_[0].size() != n_params_)
        throw DimensionMismatch("mspline baseline parameter count mismatch");
      break;
    }
  }
}

void BaselineHazard::check(const Eigen::VectorXd& p) const {
  if (p.size() != n_params_)
    throw DimensionMismatch("baseline hazard: wrong parameter count");
  for (int i = 0; i < n_params_; ++i)
    if (!(p[i] > 0.0))
      throw ConstraintViolation("baseline hazard parameters must be positive");
}

double BaselineHazard::hazard(double t, const Eigen::VectorXd& p) const {
  check(p);
  if (t < 0.0) throw NonPositiveTime("hazard requested at negative time");
  switch (family_) {
    case BaselineFamily::Weibull:
      // psi1^psi2 * psi2 * t^(psi2-1)
      return std::pow(p[0], p[1]) * p[1] * std::pow(t, p[1] - 1.0);
    case BaselineFamily::PiecewiseConstant: {
      const auto it = std::upper_bound(cuts_.begin(), cuts_.end(), t);
      return p[static_cast<int>(it - cuts_.begin())];
    }
    case BaselineFamily::MSplines: {
      const auto& basis = basis_[0];
      if (t < basis.lo()) return 0.0;
      const double u = std::min(t, basis.hi());
      double mb[64];
      basis.evaluate(u, mb);
      double h = 0.0;
      for (int i = 0; i < basis.size(); ++i) h += p[i] * mb[i];
      return h;
    }
  }
  throw ConfigError("unknown baseline family");
}

double BaselineHazard::cumulative(double t, const Eigen::VectorXd& p) const {
  check(p);
  if (t < 0.0) throw NonPositiveTime("cumulative hazard at negative time");
  switch (family_) {
    case BaselineFamily::Weibull:
      return std::pow(p[0] * t, p[1]);
    case BaselineFamily::PiecewiseConstant: {
      double acc = 0.0, lo = 0.0;
      std::size_t i = 0;
      for (; i < cuts_.size() && cuts_[i] < t; ++i) {
        acc += p[static_cast<int>(i)] * (cuts_[i] - lo);
        lo = cuts_[i];
      }
      return acc + p[static_cast<int>(i)] * (t - lo);
    }
    case BaselineFamily::MSplines: {
      const auto& basis = basis_[0];
      if (t <= basis.lo()) return 0.0;
      const double u = std::min(t, basis.hi());
      double ib[64];
      basis.integral(u, ib);
      double acc = 0.0;
      for (int i = 0; i < basis.size(); ++i) acc += p[i] * ib[i];
      // constant-hazard extension beyond the last knot
      if (t > basis.hi()) acc += hazard(basis.hi(), p) * (t - basis.hi());
      return acc;
    }
  }
  throw ConfigError("unknown baseline family");
}

double BaselineHazard::inverse_cumulative(double target, const Eigen::VectorXd& p,
                                          double cap) const {
  check(p);
  if (!(target >= 0.0)) throw ValueOutOfRange("inverse_cumulative: target < 0");
  if (target == 0.0) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  switch (family_) {
    case BaselineFamily::Weibull: {
      const double t = std::pow(target, 1.0 / p[1]) / p[0];
      return t <= cap ? t : inf;
    }
    case BaselineFamily::PiecewiseConstant: {
      double acc = 0.0, lo = 0.0;
      for (std::size_t i = 0; i < cuts_.size(); ++i) {
        const double seg = p[static_cast<int>(i)] * (cuts_[i] - lo);
        if (acc + seg >= target) {
          const double t = lo + (target - acc) / p[static_cast<int>(i)];
          return t <= cap ? t : inf;
        }
        acc += seg;
        lo = cuts_[i];
      }
      const double t = lo + (target - acc) / p[static_cast<int>(cuts_.size())];
      return t <= cap ? t : inf;
    }
    case BaselineFamily::MSplines: {
      if (cumulative(cap, p) < target) return inf;
      double lo = 0.0, hi = cap;
      while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (cumulative(mid, p) < target ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  throw ConfigError("unknown baseline family");
}

CauseHazard::CauseHazard(const CauseSpec& cause, const ModelSpec& spec)
    : base_(cause), kind_(cause.association), q_(spec.q()) {}

double CauseHazard::log_hazard(double t, double delta_t, const Eigen::VectorXd& x_s,
                               const Eigen::VectorXd& b, const CauseParams& p) const {
  double lin = x_s.dot(p.beta);
  if (kind_ == AssociationKind::RandomEffects) {
    if (p.alpha.size() != q_ || b.size() != q_)
      throw DimensionMismatch("random-effects association needs q alphas");
    lin += p.alpha.dot(b);
  } else {
    if (p.alpha.size() != 1)
      throw DimensionMismatch("current-level association needs one alpha");
    lin += p.alpha[0] * delta_t;
  }
  return std::log(base_.hazard(t, p.baseline)) + lin;
}

double CauseHazard::cumulative_re(double t, const Eigen::VectorXd& x_s,
                                  const Eigen::VectorXd& b,
                                  const CauseParams& p) const {
  if (kind_ != AssociationKind::RandomEffects)
    throw ConfigError("cumulative_re called on a current-level cause");
  if (p.alpha.size() != q_ || b.size() != q_)
    throw DimensionMismatch("random-effects association needs q alphas");
  return base_.cumulative(t, p.baseline) * std::exp(x_s.dot(p.beta) + p.alpha.dot(b));
}

double survival_all_causes_re(double t, const std::vector<CauseHazard>& causes,
                              const std::vector<Eigen::VectorXd>& x_s,
                              const Eigen::VectorXd& b,
                              const std::vector<CauseParams>& params) {
  double cum = 0.0;
  for (std::size_t pidx = 0; pidx < causes.size(); ++pidx)
    cum += causes[pidx].cumulative_re(t, x_s[pidx], b, params[pidx]);
  return std::exp(-cum);
}

}  // namespace jlp
