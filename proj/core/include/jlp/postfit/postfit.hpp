#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jlp/estimation/fit.hpp"
#include "jlp/sim/simulate.hpp"

namespace jlp {

// Expected ordinal level E[Y_k | Delta] = sum_m m P(Y_k = m | Delta).
double expected_item_level(const MarkerSpec& marker, const MarkerParams& mp,
                           double delta);

struct TrajectoryPrediction {
  std::vector<double> covariates;  // profile, aligned with fit covariate names
  std::vector<double> times;
  std::vector<double> latent;            // Delta-hat(t) at b = 0
  std::vector<double> latent_lo, latent_hi;
  // per marker: expected item level and its band
  std::vector<std::vector<double>> item, item_lo, item_hi;
};

// Plug-in prediction (theta-hat, b = 0) with pointwise 95% percentile bands
// from n_draws parameter vectors ~ N(theta-hat, V) on the unconstrained
// scale. Throws NoCovariance when the fit has no covariance matrix.
TrajectoryPrediction predict_trajectory(const FitResult& fit,
                                        const std::vector<double>& covariates,
                                        const std::vector<double>& times,
                                        int n_draws = 1000,
                                        std::uint64_t seed = 20240915);

struct HazardRatioRow {
  std::string cause, term;
  double coef = 0.0, ase = 0.0;
  double hr = 1.0, lo = 1.0, hi = 1.0;
};

// exp(coef) with Wald CI for every survival covariate and association
// coefficient. Association rows are per unit of the latent scale (one
// latent SD at t=0 under the identifiability constraints).
std::vector<HazardRatioRow> hazard_ratio_table(const FitResult& fit);

// Posterior mode of b given the subject's data, by damped Newton from b=0
// (numerical derivatives). Falls back to b=0 with flagged=false only via
// the converged output flag.
struct PosteriorMode {
  Eigen::VectorXd b;
  bool converged = true;
};
PosteriorMode posterior_random_effects(const FitResult& fit,
                                       const LikelihoodEngine& engine, int subject,
                                       int max_iter = 50);

// Kaplan-Meier with delayed entry (risk set respects left truncation):
// returns (time, survival) steps evaluated at the event times.
struct KaplanMeier {
  std::vector<double> times, survival;
  double at(double t) const;  // right-continuous step lookup
};
KaplanMeier kaplan_meier(const std::vector<double>& entry,
                         const std::vector<double>& time,
                         const std::vector<int>& event);

struct GofSurvivalRow {
  double time = 0.0;
  double observed = 1.0;
  double lo = 1.0, hi = 1.0;  // 2.5/97.5% envelope over simulated KM curves
};
struct GofLongitudinalRow {
  int marker = 0;
  double bin_lo = 0.0, bin_hi = 0.0;
  int n = 0;
  double observed_mean = 0.0;
  double predicted_mean = 0.0;  // subject-specific from posterior modes
};
struct GofReport {
  std::vector<GofSurvivalRow> survival;          // all-cause KM vs envelope
  std::vector<GofLongitudinalRow> longitudinal;  // empty bins omitted
};

// Parametric-bootstrap goodness of fit: n_sim datasets simulated at
// theta-hat with the observed covariate rows and entry times; plus the
// binned observed-vs-predicted longitudinal table.
GofReport gof_report(const FitResult& fit, const JointDataset& data,
                     int n_sim = 500, double bin_width = 1.0,
                     std::uint64_t seed = 20240915, int threads = 1);

}  // namespace jlp
