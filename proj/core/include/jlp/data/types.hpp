#pragma once

#include <string>
#include <vector>

namespace jlp {

// One row per subject: survival record plus time-independent covariates
// (aligned with JointDataset::covariate_names).
struct SubjectRecord {
  std::string id;
  double entry = 0.0;  // delayed-entry time, >= 0
  double time = 0.0;   // observed event/censoring time, >= entry
  int cause = 0;       // 0 = censored, 1..P = cause of the event
  std::vector<double> covariates;
};

// Long format: one row per subject x marker x visit. Ordinal values are
// stored as doubles holding integer levels 0..M_k.
struct LongitudinalObservation {
  int subject = -1;  // index into JointDataset::subjects
  int marker = -1;   // index into ModelSpec markers
  double time = 0.0;
  double value = 0.0;
};

struct JointDataset {
  std::vector<std::string> covariate_names;
  std::vector<SubjectRecord> subjects;
  std::vector<LongitudinalObservation> observations;
  std::string provenance;

  int subject_index(const std::string& id) const;
};

}  // namespace jlp
