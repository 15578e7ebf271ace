#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "jlp/estimation/marquardt.hpp"
#include "jlp/likelihood/engine.hpp"

namespace jlp {

struct FitOptions {
  EngineOptions engine;
  MarquardtOptions optim;
  bool use_stepwise_init = true;            // ignored when `init` is given
  std::optional<ModelParams> init;
};

struct FitResult {
  ModelSpec spec;                    // bound spec the fit was run against
  std::vector<std::string> covariate_names;
  Eigen::VectorXd u_full;            // optimum, unconstrained (incl. pinned)
  ModelParams params;                // optimum, natural scale
  Eigen::VectorXd report_est;        // per full coordinate, reporting scale
  Eigen::VectorXd report_se;         // NaN when no covariance / pinned
  Eigen::VectorXd natural_est, natural_se;
  Eigen::MatrixXd cov_free;          // V = inverse Hessian of -loglik
  bool has_covariance = false;
  double loglik = 0.0;
  double aic = 0.0;
  int n_free = 0;
  int iterations = 0;
  OptimStatus status = OptimStatus::MaxIterations;
  double crit_theta = 0.0, crit_value = 0.0, crit_deriv = 0.0;
  std::uint64_t seed = 0;
  int qmc_points = 0;

  bool converged() const { return status == OptimStatus::Converged; }
};

// Initial values from submodels of increasing complexity: the survival
// submodel is fitted with alpha = 0 (no latent dependency), the longitudinal
// submodel marginally, and the pieces are assembled with alpha = 0.
ModelParams stepwise_init(const ModelSpec& spec, const JointDataset& data,
                          const EngineOptions& opts = {});

FitResult fit(const ModelSpec& spec, const JointDataset& data,
              const FitOptions& opts = {});

// Human-readable estimate table (parameter, estimate, ase, Wald 95% CI).
std::string format_fit_report(const FitResult& fit);
// Machine-readable JSON with all FitResult fields (spec text embedded so the
// fit can be reloaded for prediction / GoF).
std::string fit_to_json(const FitResult& fit, const std::string& spec_text);
FitResult fit_from_json(const std::string& json_text);

}  // namespace jlp
