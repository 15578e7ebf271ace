#include "jlp/sim/study.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace jlp {

namespace {

using nlohmann::json;

struct ReplicateRecord {
  bool usable = false;
  std::string note;
  std::vector<double> est, se;  // reporting scale, free coords only
};

std::string checkpoint_key(const SimDesign& d) {
  std::ostringstream os;
  os << d.master_seed << ":" << d.n_subjects << ":" << d.spec.n_markers() << ":"
     << d.spec.n_causes() << ":" << d.horizon << ":" << d.entry_max;
  return os.str();
}

ReplicateRecord load_checkpoint(const std::string& path, const std::string& key,
                                std::size_t n_coords) {
  ReplicateRecord rec;
  std::ifstream in(path);
  if (!in) return rec;
  json j;
  try {
    in >> j;
    if (j.at("key").get<std::string>() != key) return rec;
    rec.usable = j.at("usable").get<bool>();
    rec.note = j.value("note", "");
    if (rec.usable) {
      rec.est = j.at("est").get<std::vector<double>>();
      rec.se = j.at("se").get<std::vector<double>>();
      if (rec.est.size() != n_coords || rec.se.size() != n_coords) {
        rec.usable = false;
        rec.est.clear();
        rec.se.clear();
        return rec;
      }
    }
    rec.note = "checkpoint:" + rec.note;
  } catch (const json::exception&) {
    rec.usable = false;
  }
  return rec;
}

void save_checkpoint(const std::string& path, const std::string& key,
                     const ReplicateRecord& rec) {
  json j;
  j["key"] = key;
  j["usable"] = rec.usable;
  j["note"] = rec.note;
  j["est"] = rec.est;
  j["se"] = rec.se;
  std::ofstream out(path);
  out << j.dump() << "\n";
}

}  // namespace

SimStudySummary run_sim_study(const SimDesign& design, const StudyOptions& opts) {
  if (design.replicates < 2)
    throw ValueOutOfRange("a simulation study needs at least 2 replicates");
  ModelSpec spec = design.spec;
  std::vector<std::string> cov_names;
  for (const auto& c : design.covariates) cov_names.push_back(c.name);
  spec.bind_covariates(cov_names);
  const ParameterLayout layout(spec);

  // free (non-pinned) coordinates, reporting scale
  std::vector<int> coords;
  for (int i = 0; i < layout.total(); ++i)
    if (!layout.coord(i).pinned) coords.push_back(i);
  const Eigen::VectorXd truth_report = layout.report_values(layout.pack(design.truth));

  const std::string key = checkpoint_key(design);
  if (!opts.checkpoint_dir.empty())
    std::filesystem::create_directories(opts.checkpoint_dir);

  std::vector<ReplicateRecord> recs(design.replicates);
  for (int r = 0; r < design.replicates; ++r) {
    std::string ckpt;
    if (!opts.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "rep_%04d.json", r);
      ckpt = opts.checkpoint_dir + "/" + name;
      recs[r] = load_checkpoint(ckpt, key, coords.size());
      if (!recs[r].note.empty() || recs[r].usable) {
        if (opts.verbose)
          std::fprintf(stderr, "[simstudy] replicate %d: %s\n", r,
                       recs[r].note.c_str());
        continue;
      }
    }
    ReplicateRecord rec;
    try {
      const JointDataset data =
          simulate_dataset(design, derive_seed(design.master_seed, 2 * r));
      FitOptions fo = opts.fit;
      fo.engine.scramble_seed = derive_seed(design.master_seed, 2 * r + 1);
      const FitResult f = fit(design.spec, data, fo);
      if (f.converged() && f.has_covariance) {
        rec.usable = true;
        rec.note = "converged";
        for (int c : coords) {
          rec.est.push_back(f.report_est[c]);
          rec.se.push_back(f.report_se[c]);
        }
      } else {
        rec.note = f.converged() ? "no covariance" : "not converged";
      }
    } catch (const Error& e) {
      rec.note = std::string("error: ") + e.what();
    }
    if (opts.verbose)
      std::fprintf(stderr, "[simstudy] replicate %d: %s\n", r, rec.note.c_str());
    if (!ckpt.empty()) save_checkpoint(ckpt, key, rec);
    recs[r] = std::move(rec);
  }

  SimStudySummary out;
  out.replicates = design.replicates;
  for (const auto& rec : recs) (rec.usable ? out.converged : out.failed)++;
  if (out.converged < 2)
    throw NoConvergence("fewer than 2 converged replicates in the study");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ci = 0; ci < coords.size(); ++ci) {
    ParamSummary row;
    row.name = layout.name(coords[ci]);
    row.truth = truth_report[coords[ci]];
    double sum = 0.0, sum_se = 0.0;
    int covered = 0;
    for (const auto& rec : recs) {
      if (!rec.usable) continue;
      sum += rec.est[ci];
      sum_se += rec.se[ci];
      if (std::abs(rec.est[ci] - row.truth) <= 1.96 * rec.se[ci]) ++covered;
    }
    row.mean_est = sum / out.converged;
    row.mean_ase = sum_se / out.converged;
    row.coverage_pct = 100.0 * covered / out.converged;
    row.rel_bias_pct = row.truth != 0.0
                           ? 100.0 * (row.mean_est - row.truth) / row.truth
                           : nan;
    double ss = 0.0;
    for (const auto& rec : recs)
      if (rec.usable) ss += (rec.est[ci] - row.mean_est) * (rec.est[ci] - row.mean_est);
    row.emp_sd = std::sqrt(ss / (out.converged - 1));
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string SimStudySummary::to_csv() const {
  std::ostringstream os;
  os << "parameter,truth,mean_est,rel_bias_pct,emp_sd,mean_ase,coverage_pct\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.name << "," << r.truth << "," << r.mean_est << "," << r.rel_bias_pct
       << "," << r.emp_sd << "," << r.mean_ase << "," << r.coverage_pct << "\n";
  os << "# replicates=" << replicates << " converged=" << converged
     << " failed=" << failed << "\n";
  return os.str();
}

}  // namespace jlp
