#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "jlp/data/dataset_io.hpp"
#include "jlp/estimation/fit.hpp"
#include "jlp/postfit/postfit.hpp"
#include "jlp/sim/design_io.hpp"
#include "jlp/sim/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw jlp::ConfigError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw jlp::ConfigError("cannot write file: " + path.string());
  out << content;
}

struct CommonOpts {
  std::string out_dir = ".";
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
  int qmc_points = 1000;
  int threads = 1;
  int max_iter = 150;
  double eps_theta = 1e-4, eps_loglik = 1e-4, eps_deriv = 1e-4;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_optim) {
  cmd->add_option("-o,--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "RNG / QMC scramble seed");
  cmd->add_option("--threads", o.threads, "worker threads");
  if (with_optim) {
    cmd->add_option("--qmc-points", o.qmc_points, "QMC integration points");
    cmd->add_option("--max-iter", o.max_iter, "optimizer iteration cap");
    cmd->add_option("--eps-theta", o.eps_theta, "parameter-change criterion");
    cmd->add_option("--eps-loglik", o.eps_loglik, "objective-change criterion");
    cmd->add_option("--eps-deriv", o.eps_deriv, "rel. distance-to-minimum criterion");
  }
}

jlp::FitOptions fit_options(const CommonOpts& o) {
  jlp::FitOptions fo;
  fo.engine.qmc_points = o.qmc_points;
  fo.engine.scramble_seed = o.seed;
  fo.engine.threads = o.threads;
  fo.optim.max_iter = o.max_iter;
  fo.optim.eps_theta = o.eps_theta;
  fo.optim.eps_value = o.eps_loglik;
  fo.optim.eps_deriv = o.eps_deriv;
  return fo;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& config) {
  json m;
  m["command"] = command;
  m["config"] = config;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

json common_json(const CommonOpts& o) {
  json j;
  j["out"] = o.out_dir;
  j["seed"] = o.seed;
  j["qmc_points"] = o.qmc_points;
  j["threads"] = o.threads;
  j["max_iter"] = o.max_iter;
  j["eps_theta"] = o.eps_theta;
  j["eps_loglik"] = o.eps_loglik;
  j["eps_deriv"] = o.eps_deriv;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"joint latent-process models: estimation, simulation, prediction"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string spec_path, long_path, surv_path, design_path, fit_path;
  bool no_stepwise = false;

  auto* cmd_fit = app.add_subcommand("fit", "maximum-likelihood estimation");
  cmd_fit->add_option("--spec", spec_path, "model spec file")->required();
  cmd_fit->add_option("--longitudinal", long_path, "marker CSV")->required();
  cmd_fit->add_option("--survival", surv_path, "survival CSV")->required();
  cmd_fit->add_flag("--no-stepwise-init", no_stepwise,
                    "start from default values instead of submodel fits");
  add_common(cmd_fit, o, true);

  auto* cmd_sim = app.add_subcommand("simulate", "generate one dataset");
  cmd_sim->add_option("--design", design_path, "simulation design file")->required();
  add_common(cmd_sim, o, false);

  auto* cmd_study = app.add_subcommand("simstudy", "replicated simulate+fit study");
  cmd_study->add_option("--design", design_path, "simulation design file")
      ->required();
  std::string checkpoint_dir;
  bool verbose = false;
  cmd_study->add_option("--checkpoint-dir", checkpoint_dir,
                        "reuse per-replicate results across runs");
  cmd_study->add_flag("--verbose", verbose, "progress lines on stderr");
  add_common(cmd_study, o, true);

  auto* cmd_pred = app.add_subcommand("predict", "trajectory prediction from a fit");
  cmd_pred->add_option("--fit", fit_path, "fit JSON from the fit subcommand")
      ->required();
  std::vector<double> profile, grid;
  int n_draws = 1000;
  cmd_pred->add_option("--profile", profile, "covariate values (fit order)");
  cmd_pred->add_option("--times", grid, "prediction time grid")->required();
  cmd_pred->add_option("--draws", n_draws, "Monte Carlo parameter draws");
  add_common(cmd_pred, o, false);

  auto* cmd_gof = app.add_subcommand("gof", "goodness-of-fit summaries");
  cmd_gof->add_option("--fit", fit_path, "fit JSON")->required();
  cmd_gof->add_option("--longitudinal", long_path, "marker CSV")->required();
  cmd_gof->add_option("--survival", surv_path, "survival CSV")->required();
  int n_sim = 500;
  double bin_width = 1.0;
  cmd_gof->add_option("--sims", n_sim, "simulated datasets for the envelope");
  cmd_gof->add_option("--bin-width", bin_width, "longitudinal time-bin width");
  add_common(cmd_gof, o, false);

  CLI11_PARSE(app, argc, argv);
  const fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);

  if (cmd_fit->parsed()) {
    const std::string spec_text = read_file(spec_path);
    jlp::ModelSpec spec = jlp::parse_model_spec_text(spec_text);
    const jlp::JointDataset data = jlp::load_joint_dataset(long_path, surv_path, spec);
    jlp::FitOptions fo = fit_options(o);
    fo.use_stepwise_init = !no_stepwise;
    const jlp::FitResult fit = jlp::fit(spec, data, fo);
    write_file(out_dir / "fit.txt", jlp::format_fit_report(fit));
    write_file(out_dir / "fit.json", jlp::fit_to_json(fit, spec_text) + "\n");
    json cfg = common_json(o);
    cfg["spec"] = spec_path;
    cfg["longitudinal"] = long_path;
    cfg["survival"] = surv_path;
    cfg["stepwise_init"] = !no_stepwise;
    write_manifest(out_dir, "fit", cfg);
    std::cout << jlp::format_fit_report(fit);
    return fit.converged() ? 0 : 4;
  }

  if (cmd_sim->parsed()) {
    jlp::SimDesign design = jlp::load_sim_design(design_path);
    const jlp::JointDataset data = jlp::simulate_dataset(design, o.seed);
    jlp::write_joint_dataset(data, (out_dir / "longitudinal.csv").string(),
                             (out_dir / "survival.csv").string(), design.spec);
    // truth on the reporting scale, for downstream comparison
    jlp::ModelSpec bound = design.spec;
    std::vector<std::string> names;
    for (const auto& c : design.covariates) names.push_back(c.name);
    bound.bind_covariates(names);
    const jlp::ParameterLayout layout(bound);
    const Eigen::VectorXd truth = layout.report_values(layout.pack(design.truth));
    json jt;
    for (int i = 0; i < layout.total(); ++i) jt[layout.name(i)] = truth[i];
    write_file(out_dir / "truth.json", jt.dump(2) + "\n");
    json cfg = common_json(o);
    cfg["design"] = design_path;
    write_manifest(out_dir, "simulate", cfg);
    return 0;
  }

  if (cmd_study->parsed()) {
    const jlp::SimDesign design = jlp::load_sim_design(design_path);
    jlp::StudyOptions so;
    so.fit = fit_options(o);
    so.checkpoint_dir = checkpoint_dir;
    so.verbose = verbose;
    const jlp::SimStudySummary summary = jlp::run_sim_study(design, so);
    write_file(out_dir / "simstudy.csv", summary.to_csv());
    json cfg = common_json(o);
    cfg["design"] = design_path;
    cfg["checkpoint_dir"] = checkpoint_dir;
    write_manifest(out_dir, "simstudy", cfg);
    std::cout << summary.to_csv();
    return 0;
  }

  if (cmd_pred->parsed()) {
    const jlp::FitResult fit = jlp::fit_from_json(read_file(fit_path));
    const jlp::TrajectoryPrediction pred =
        jlp::predict_trajectory(fit, profile, grid, n_draws, o.seed);
    std::ostringstream csv;
    csv << "time,series,estimate,lower,upper\n";
    csv.precision(10);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      csv << grid[t] << ",latent," << pred.latent[t] << "," << pred.latent_lo[t]
          << "," << pred.latent_hi[t] << "\n";
      for (int k = 0; k < fit.spec.n_markers(); ++k)
        csv << grid[t] << "," << fit.spec.markers[k].name << ","
            << pred.item[k][t] << "," << pred.item_lo[k][t] << ","
            << pred.item_hi[k][t] << "\n";
    }
    write_file(out_dir / "trajectory.csv", csv.str());
    std::ostringstream hr;
    hr << "cause,term,coef,ase,hr,ci95_lo,ci95_hi\n";
    hr.precision(10);
    for (const auto& row : jlp::hazard_ratio_table(fit))
      hr << row.cause << "," << row.term << "," << row.coef << "," << row.ase
         << "," << row.hr << "," << row.lo << "," << row.hi << "\n";
    write_file(out_dir / "hazard_ratios.csv", hr.str());
    json cfg = common_json(o);
    cfg["fit"] = fit_path;
    cfg["draws"] = n_draws;
    write_manifest(out_dir, "predict", cfg);
    return 0;
  }

  if (cmd_gof->parsed()) {
    const jlp::FitResult fit = jlp::fit_from_json(read_file(fit_path));
    jlp::ModelSpec spec = fit.spec;
    const jlp::JointDataset data = jlp::load_joint_dataset(long_path, surv_path, spec);
    const jlp::GofReport rep =
        jlp::gof_report(fit, data, n_sim, bin_width, o.seed, o.threads);
    std::ostringstream surv;
    surv << "time,observed_km,envelope_lo,envelope_hi\n";
    surv.precision(10);
    for (const auto& r : rep.survival)
      surv << r.time << "," << r.observed << "," << r.lo << "," << r.hi << "\n";
    write_file(out_dir / "gof_survival.csv", surv.str());
    std::ostringstream lon;
    lon << "marker,bin_lo,bin_hi,n,observed_mean,predicted_mean\n";
    lon.precision(10);
    for (const auto& r : rep.longitudinal)
      lon << fit.spec.markers[r.marker].name << "," << r.bin_lo << "," << r.bin_hi
          << "," << r.n << "," << r.observed_mean << "," << r.predicted_mean
          << "\n";
    write_file(out_dir / "gof_longitudinal.csv", lon.str());
    json cfg = common_json(o);
    cfg["fit"] = fit_path;
    cfg["sims"] = n_sim;
    cfg["bin_width"] = bin_width;
    write_manifest(out_dir, "gof", cfg);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const jlp::Error& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 3;
  }
}
