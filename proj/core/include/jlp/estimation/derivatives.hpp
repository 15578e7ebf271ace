#pragma once

#include <Eigen/Core>
#include <functional>

namespace jlp {

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Per-coordinate central-difference steps: h_i = max(1e-4, 1e-4 |theta_i|).
Eigen::VectorXd derivative_steps(const Eigen::VectorXd& theta);

// Central-difference gradient (2p evaluations).
Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& theta);

// Gradient and symmetric Hessian in one sweep sharing evaluations:
//   g_i   = [f(+i) - f(-i)] / (2 h_i)
//   H_ii  = [f(+i) + f(-i) - 2 f0] / h_i^2
//   H_ij  = [f(+i+j) + f(-i-j) - f(+i) - f(-i) - f(+j) - f(-j) + 2 f0]
//           / (2 h_i h_j)
// which is exact on quadratics and costs 1 + 2p + p(p-1) evaluations.
// `f0` is the value at theta (supplied by the caller, typically already
// known from the line search). Throws NonFiniteObjective naming the stencil
// point if any evaluation is non-finite.
void numerical_gradient_hessian(const Objective& f, const Eigen::VectorXd& theta,
                                double f0, Eigen::VectorXd& grad,
                                Eigen::MatrixXd& hess);

}  // namespace jlp
