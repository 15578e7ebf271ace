#include "jlp/estimation/derivatives.hpp"

#include <cmath>
#include <string>

#include "jlp/errors.hpp"

namespace jlp {

namespace {

double checked_eval(const Objective& f, const Eigen::VectorXd& x,
                    const char* where) {
  const double v = f(x);
  if (!std::isfinite(v))
    throw NonFiniteObjective(std::string("objective is not finite at ") + where +
                             " stencil point");
  return v;
}

}  // namespace

Eigen::VectorXd derivative_steps(const Eigen::VectorXd& theta) {
  Eigen::VectorXd h(theta.size());
  for (int i = 0; i < theta.size(); ++i)
    h[i] = std::max(1e-4, 1e-4 * std::abs(theta[i]));
  return h;
}

Eigen::VectorXd numerical_gradient(const Objective& f,
                                   const Eigen::VectorXd& theta) {
  const Eigen::VectorXd h = derivative_steps(theta);
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd x = theta;
  for (int i = 0; i < theta.size(); ++i) {
    x[i] = theta[i] + h[i];
    const double fp = checked_eval(f, x, "gradient");
    x[i] = theta[i] - h[i];
    const double fm = checked_eval(f, x, "gradient");
    x[i] = theta[i];
    g[i] = (fp - fm) / (2.0 * h[i]);
  }
  return g;
}

void numerical_gradient_hessian(const Objective& f, const Eigen::VectorXd& theta,
                                double f0, Eigen::VectorXd& grad,
                                Eigen::MatrixXd& hess) {
  const int p = static_cast<int>(theta.size());
  const Eigen::VectorXd h = derivative_steps(theta);
  Eigen::VectorXd fp(p), fm(p);
  Eigen::VectorXd x = theta;
  if (!std::isfinite(f0))
    throw NonFiniteObjective("objective is not finite at the expansion point");
  for (int i = 0; i < p; ++i) {
    x[i] = theta[i] + h[i];
    fp[i] = checked_eval(f, x, "axis");
    x[i] = theta[i] - h[i];
    fm[i] = checked_eval(f, x, "axis");
    x[i] = theta[i];
  }
  grad.resize(p);
  hess.resize(p, p);
  for (int i = 0; i < p; ++i) {
    grad[i] = (fp[i] - fm[i]) / (2.0 * h[i]);
    hess(i, i) = (fp[i] + fm[i] - 2.0 * f0) / (h[i] * h[i]);
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      x[i] = theta[i] + h[i];
      x[j] = theta[j] + h[j];
      const double fpp = checked_eval(f, x, "diagonal");
      x[i] = theta[i] - h[i];
      x[j] = theta[j] - h[j];
      const double fmm = checked_eval(f, x, "diagonal");
      x[i] = theta[i];
      x[j] = theta[j];
      const double v =
          (fpp + fmm - fp[i] - fm[i] - fp[j] - fm[j] + 2.0 * f0) /
          (2.0 * h[i] * h[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
}

}  // namespace jlp
