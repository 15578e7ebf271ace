#include "jlp/data/design.hpp"

#include "jlp/errors.hpp"

namespace jlp {

Eigen::VectorXd eval_terms(const std::vector<Term>& terms, double t,
                           const std::vector<double>& covariates) {
  Eigen::VectorXd out(static_cast<int>(terms.size()));
  for (int i = 0; i < out.size(); ++i) out[i] = terms[i].evaluate(t, covariates);
  return out;
}

Eigen::VectorXd survival_covariate_row(const SubjectRecord& subject,
                                       const CauseSpec& cause,
                                       const std::vector<std::string>& covariate_names) {
  Eigen::VectorXd out(static_cast<int>(cause.covariates.size()));
  for (int i = 0; i < out.size(); ++i) {
    int idx = -1;
    for (int j = 0; j < static_cast<int>(covariate_names.size()); ++j)
      if (covariate_names[j] == cause.covariates[i]) idx = j;
    if (idx < 0)
      throw UnknownCovariate("survival covariate '" + cause.covariates[i] +
                             "' not present in the dataset");
    out[i] = subject.covariates[idx];
  }
  return out;
}

Design build_design(const SubjectRecord& subject, double t, const ModelSpec& spec,
                    const std::vector<std::string>& covariate_names) {
  ModelSpec bound = spec;  // binding is cheap; keeps this function pure
  bound.bind_covariates(covariate_names);
  Design d;
  d.x_fixed = eval_terms(bound.fixed_terms, t, subject.covariates);
  d.z_random = eval_terms(bound.random_terms, t, subject.covariates);
  d.x_surv.reserve(bound.causes.size());
  for (const auto& c : bound.causes)
    d.x_surv.push_back(survival_covariate_row(subject, c, covariate_names));
  return d;
}

}  // namespace jlp
