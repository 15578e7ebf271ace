#pragma once

#include <Eigen/Core>
#include <functional>

#include "jlp/estimation/derivatives.hpp"

namespace jlp {

struct MarquardtOptions {
  int max_iter = 150;
  double eps_theta = 1e-4;   // max parameter-change criterion
  double eps_value = 1e-4;   // objective-change criterion
  double eps_deriv = 1e-4;   // relative-distance-to-minimum g'H^-1 g / p
  double initial_damping = 1e-2;
  double max_damping = 1e12;
};

enum class OptimStatus { Converged, MaxIterations, Stalled };

struct MarquardtResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;     // undamped, at theta
  int iterations = 0;
  OptimStatus status = OptimStatus::MaxIterations;
  // last values of the three convergence criteria
  double crit_theta = 0.0, crit_value = 0.0, crit_deriv = 0.0;
};

// Marquardt-Levenberg minimizer with diagonal inflation (damping scaled by
// 10 on a rejected step, 0.1 on an accepted one) and the three simultaneous
// convergence criteria (parameter change, objective change, and the
// relative distance to the minimum computed from the undamped Hessian).
//
// `on_accept`, when provided, is called with every accepted iterate before
// the next derivative sweep; the likelihood engine uses it to re-anchor its
// block cache.
MarquardtResult marquardt_minimize(
    const Objective& f, const Eigen::VectorXd& theta0,
    const MarquardtOptions& opts = {},
    const std::function<void(const Eigen::VectorXd&)>& on_accept = nullptr);

}  // namespace jlp
