#pragma once

#include <Eigen/Core>
#include <vector>

#include "jlp/data/model_spec.hpp"
#include "jlp/data/types.hpp"

namespace jlp {

// Design vectors for one subject at one time point, in the fixed term order
// declared by the spec. Pure function of (subject, t, spec).
struct Design {
  Eigen::VectorXd x_fixed;               // X^L(t)
  Eigen::VectorXd z_random;              // Z(t)
  std::vector<Eigen::VectorXd> x_surv;   // X^S_p per cause
};

Design build_design(const SubjectRecord& subject, double t, const ModelSpec& spec,
                    const std::vector<std::string>& covariate_names);

// Row-wise helpers used by the likelihood engine (spec must already be bound
// to the dataset's covariate names).
Eigen::VectorXd eval_terms(const std::vector<Term>& terms, double t,
                           const std::vector<double>& covariates);
Eigen::VectorXd survival_covariate_row(const SubjectRecord& subject,
                                       const CauseSpec& cause,
                                       const std::vector<std::string>& covariate_names);

}  // namespace jlp
