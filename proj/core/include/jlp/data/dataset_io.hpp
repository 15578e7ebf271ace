#pragma once

#include <string>

#include "jlp/data/model_spec.hpp"
#include "jlp/data/types.hpp"

namespace jlp {

// Reads the two CSV files (longitudinal: subject,marker,time,value;
// survival: subject,entry,time,cause,<covariate...>) and validates all
// type/range invariants against the model spec.
JointDataset load_joint_dataset(const std::string& longitudinal_path,
                                const std::string& survival_path,
                                const ModelSpec& spec);

// Validation of an in-memory dataset (also used after simulation).
void validate_dataset(const JointDataset& data, const ModelSpec& spec);

// Writes the dataset back to the same CSV schema; ingestion of well-formed
// files round-trips bit-exactly.
void write_joint_dataset(const JointDataset& data,
                         const std::string& longitudinal_path,
                         const std::string& survival_path,
                         const ModelSpec& spec);

}  // namespace jlp
