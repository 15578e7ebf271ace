#include "jlp/estimation/marquardt.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "jlp/errors.hpp"

namespace jlp {

namespace {

// Relative distance to the minimum, g' H^-1 g / p, from the undamped
// Hessian. NaN when H is not positive definite (criterion then fails).
double rdm_criterion(const Eigen::VectorXd& g, const Eigen::MatrixXd& h) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success)
    return std::numeric_limits<double>::quiet_NaN();
  return g.dot(llt.solve(g)) / static_cast<double>(g.size());
}

double guarded_eval(const Objective& f, const Eigen::VectorXd& x) {
  try {
    return f(x);
  } catch (const Error&) {
    // treat invalid trial points (underflow, constraint walls) as rejected
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

MarquardtResult marquardt_minimize(
    const Objective& f, const Eigen::VectorXd& theta0,
    const MarquardtOptions& opts,
    const std::function<void(const Eigen::VectorXd&)>& on_accept) {
  const int p = static_cast<int>(theta0.size());
  MarquardtResult res;
  res.theta = theta0;
  if (on_accept) on_accept(res.theta);
  res.value = f(res.theta);
  if (!std::isfinite(res.value))
    throw NonFiniteObjective("objective is not finite at the starting point");

  double damping = opts.initial_damping;
  double last_step = std::numeric_limits<double>::infinity();
  double last_improve = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    res.iterations = iter;
    numerical_gradient_hessian(f, res.theta, res.value, res.grad, res.hess);

    res.crit_theta = last_step;
    res.crit_value = last_improve;
    res.crit_deriv = rdm_criterion(res.grad, res.hess);
    if (res.crit_theta < opts.eps_theta && res.crit_value < opts.eps_value &&
        res.crit_deriv < opts.eps_deriv) {
      res.status = OptimStatus::Converged;
      return res;
    }

    // diagonal inflation floor keeps the damped system solvable even when
    // a Hessian diagonal entry is ~0 or negative
    Eigen::VectorXd dscale(p);
    for (int i = 0; i < p; ++i)
      dscale[i] = std::max(std::abs(res.hess(i, i)), 1e-6);

    bool accepted = false;
    while (damping <= opts.max_damping) {
      Eigen::MatrixXd hd = res.hess;
      hd.diagonal() += damping * dscale;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hd);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd step = -ldlt.solve(res.grad);
        const Eigen::VectorXd trial = res.theta + step;
        const double fv = guarded_eval(f, trial);
        if (fv < res.value) {
          last_step = step.cwiseAbs().maxCoeff();
          last_improve = res.value - fv;
          res.theta = trial;
          res.value = fv;
          if (on_accept) on_accept(res.theta);
          damping = std::max(damping * 0.1, 1e-12);
          accepted = true;
          break;
        }
      }
      damping *= 10.0;
    }

    if (!accepted) {
      // no downhill step found at any damping: we are at a numerical
      // stationary point; report convergence only if the criteria agree
      res.crit_theta = 0.0;
      res.crit_value = 0.0;
      res.status = (res.crit_deriv < opts.eps_deriv) ? OptimStatus::Converged
                                                     : OptimStatus::Stalled;
      return res;
    }
  }
  // refresh derivatives at the final point so callers get a consistent pair
  numerical_gradient_hessian(f, res.theta, res.value, res.grad, res.hess);
  res.crit_theta = last_step;
  res.crit_value = last_improve;
  res.crit_deriv = rdm_criterion(res.grad, res.hess);
  res.status = OptimStatus::MaxIterations;
  return res;
}

}  // namespace jlp
