#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "jlp/data/types.hpp"
#include "jlp/model/hazard.hpp"
#include "jlp/model/measurement.hpp"
#include "jlp/model/parameters.hpp"

namespace jlp {

struct EngineOptions {
  int qmc_points = 1000;
  std::uint64_t scramble_seed = 0x9e3779b97f4a7c15ull;
  int threads = 1;
};

// Marginal log-likelihood of the joint model, integrating the random effects
// by quasi-Monte Carlo. Per-subject designs (marker visits, survival
// covariates, Gauss-Kronrod nodes for current-level causes) are precomputed
// once; parameter evaluations only touch the blocks that changed since the
// last rebased point, which makes the numerical-derivative sweeps cheap.
class LikelihoodEngine {
 public:
  LikelihoodEngine(const ModelSpec& spec, const JointDataset& data,
                   const EngineOptions& opts = {});

  const ModelSpec& spec() const { return spec_; }
  const ParameterLayout& layout() const { return layout_; }
  const EngineOptions& options() const { return opts_; }
  int n_subjects() const { return static_cast<int>(subjects_.size()); }
  int n_obs_total() const { return n_obs_total_; }

  // Full recompute at structured parameters; no cache interaction.
  double total_loglik(const ModelParams& p) const;
  double individual_loglik(int i, const ModelParams& p) const;

  // log f(Y_i, T_i, d_i | b) -- joint conditional density given the random
  // effects, without the N(0, B) prior. Used by the posterior b solver.
  double conditional_loglik(int i, const ModelParams& p,
                            const Eigen::VectorXd& b) const;

  // Optimizer-facing objective: -loglik at a free unconstrained vector.
  // Reuses cached per-block contributions relative to the last rebase point.
  double eval_free(const Eigen::VectorXd& u_free);
  void rebase(const Eigen::VectorXd& u_free);  // recompute cache at this point
  std::int64_t n_block_recomputes() const { return n_block_recomputes_; }

 private:
  struct MarkerObs {
    std::vector<double> values;
    Eigen::MatrixXd X;  // visits x n_fixed
    Eigen::MatrixXd Z;  // visits x q
  };
  struct SubjectWork {
    double entry = 0.0, time = 0.0;
    int cause = 0;
    std::vector<Eigen::VectorXd> x_surv;  // per cause
    Eigen::VectorXd xT, zT;               // designs at the event time
    // GK15 node times/weights and latent designs on [0, T] and [0, T0];
    // only filled when some cause uses a current-level association
    std::array<double, 15> tT{}, wT{}, tE{}, wE{};
    Eigen::MatrixXd Xt, Zt, Xe, Ze;  // 15 x n_fixed / 15 x q
    std::vector<MarkerObs> markers;  // per marker
  };

  ModelSpec spec_;
  ParameterLayout layout_;
  EngineOptions opts_;
  std::vector<SubjectWork> subjects_;
  std::vector<std::string> subject_ids_;
  std::vector<CauseHazard> hazards_;
  std::vector<CurvilinearLink> links_;  // indexed like links_index_
  std::vector<int> link_index_;         // per marker; -1 unless curvilinear
  Eigen::MatrixXd z_;                   // q x R standard normal QMC draws
  int n_obs_total_ = 0;
  bool any_entry_ = false;

  // cache, keyed by base_free_
  bool cache_valid_ = false;
  Eigen::VectorXd base_free_;
  std::vector<Eigen::MatrixXd> c_marker_;  // per marker: R x N log-lik
  std::vector<Eigen::MatrixXd> c_cause_;   // per cause: R x N (d loglam - Lam^T)
  std::vector<Eigen::MatrixXd> c_trunc_;   // per cause: R x N Lam^{T0}
  Eigen::MatrixXd c_row_sum_;              // R x N
  Eigen::MatrixXd c_tr_sum_;               // R x N
  mutable std::int64_t n_block_recomputes_ = 0;

  // per-subject kernels (write R values into the given column pointers)
  void marker_col(int i, int k, const ModelParams& p, const Eigen::MatrixXd& bd,
                  double* out) const;
  void cause_col(int i, int pidx, const ModelParams& p, const Eigen::MatrixXd& bd,
                 double* out_ll, double* out_tr) const;
  double reduce(const Eigen::MatrixXd& row_sum, const Eigen::MatrixXd& tr_sum) const;
  void compute_all(const ModelParams& p, std::vector<Eigen::MatrixXd>& cm,
                   std::vector<Eigen::MatrixXd>& cc,
                   std::vector<Eigen::MatrixXd>& ct) const;
  std::vector<int> dirty_blocks(const Eigen::VectorXd& u_free) const;
};

}  // namespace jlp
