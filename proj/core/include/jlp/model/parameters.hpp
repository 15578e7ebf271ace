#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "jlp/data/model_spec.hpp"

namespace jlp {

// Natural-scale (constrained) parameters of the full joint model.
struct MarkerParams {
  // gaussian: eta = (location, scale); ordinal: eta = thresholds (M_k of
  // them, non-decreasing); curvilinear: eta = (intercept, basis weights >= 0)
  Eigen::VectorXd eta;
  double sigma = 1.0;
};

struct CauseParams {
  Eigen::VectorXd baseline;  // weibull (scale, shape); piecewise heights; mspline coefs
  Eigen::VectorXd beta;      // covariate effects
  Eigen::VectorXd alpha;     // association (length q or 1)
};

struct ModelParams {
  Eigen::VectorXd beta;    // fixed effects, aligned with spec.fixed_terms
  Eigen::MatrixXd cholB;   // lower-triangular Cholesky factor of B
  std::vector<MarkerParams> markers;
  std::vector<CauseParams> causes;

  Eigen::MatrixXd B() const { return cholB * cholB.transpose(); }
};

// Zero/identity-initialized parameters with the right shapes for a spec.
ModelParams make_default_params(const ModelSpec& spec);

enum class BlockKind { Structural, Marker, Cause };
enum class CoordTransform { Identity, Square, ThresholdIncrement };
enum class ReportScale { Natural, Unconstrained };

struct CoordInfo {
  std::string name;
  int block = 0;                 // index into layout blocks
  CoordTransform transform = CoordTransform::Identity;
  ReportScale report = ReportScale::Natural;
  bool pinned = false;
  double pinned_value = 0.0;     // on the unconstrained scale
};

// Bijection between the structured natural-scale parameters and the flat
// unconstrained optimizer vector. Positive scalars travel as square roots,
// ordinal thresholds as (first, sqrt increments); identifiability pins the
// latent intercept to 0 and the leading Cholesky entry to 1 unless the model
// is a single Gaussian marker with the identity link.
class ParameterLayout {
 public:
  explicit ParameterLayout(const ModelSpec& spec);

  int total() const { return static_cast<int>(coords_.size()); }
  int n_free() const { return n_free_; }
  int n_blocks() const { return n_blocks_; }

  const CoordInfo& coord(int i) const { return coords_[i]; }
  const std::string& name(int i) const { return coords_[i].name; }
  int index_of(const std::string& name) const;
  // free slot of a full coordinate, -1 when pinned
  int free_index(int full_coord) const { return free_index_[full_coord]; }

  BlockKind block_kind(int b) const { return block_kinds_[b]; }
  int block_object(int b) const { return block_objects_[b]; }  // marker/cause index
  // free-coordinate range [begin, end) of block b
  std::pair<int, int> block_free_range(int b) const { return block_free_ranges_[b]; }

  // natural <-> unconstrained (full vector includes pinned coordinates)
  Eigen::VectorXd pack(const ModelParams& p) const;
  ModelParams unpack(const Eigen::VectorXd& u_full) const;

  Eigen::VectorXd full_to_free(const Eigen::VectorXd& u_full) const;
  Eigen::VectorXd free_to_full(const Eigen::VectorXd& u_free) const;

  // per-coordinate natural values and d(natural)/d(u_full) Jacobian
  Eigen::VectorXd natural_values(const Eigen::VectorXd& u_full) const;
  Eigen::MatrixXd natural_jacobian(const Eigen::VectorXd& u_full) const;

  // reporting convention (Weibull and positive baseline coefficients as
  // square roots, thresholds as first + sqrt increments, everything else
  // natural)
  Eigen::VectorXd report_values(const Eigen::VectorXd& u_full) const;
  Eigen::VectorXd report_ase(const Eigen::VectorXd& u_full,
                             const Eigen::MatrixXd& cov_free) const;
  Eigen::VectorXd natural_ase(const Eigen::VectorXd& u_full,
                              const Eigen::MatrixXd& cov_free) const;

  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  std::vector<CoordInfo> coords_;
  std::vector<BlockKind> block_kinds_;
  std::vector<int> block_objects_;
  std::vector<std::pair<int, int>> block_free_ranges_;
  std::vector<int> free_index_;  // per full coord: free slot or -1
  int n_free_ = 0;
  int n_blocks_ = 0;

  Eigen::MatrixXd full_covariance(const Eigen::MatrixXd& cov_free) const;
};

}  // namespace jlp
