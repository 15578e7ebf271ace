#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("jlp_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

int run_cli(const std::string& args, const fs::path& stderr_file = {}) {
  std::string cmd = std::string(JOINTLP_BIN) + " " + args;
  if (!stderr_file.empty()) cmd += " 2> " + stderr_file.string();
  cmd += " > /dev/null";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kSpecText = R"([structural]
fixed = 1, t
random = 1, t

[marker y]
type = gaussian
link = identity

[cause c1]
baseline = weibull
association = random_effects
)";

std::string design_text(int subjects, int replicates) {
  std::ostringstream os;
  os << kSpecText << R"(
[simulation]
subjects = )" << subjects
     << "\nreplicates = " << replicates << R"(
seed = 4242
horizon = 3
spacing = 1
entry_max = 0

[truth]
beta = 0.3 0.8
chol = 0.9 0.1 0.5

[truth.marker y]
eta = 0 1
sigma = 0.8

[truth.cause c1]
baseline = 0.35 1.6
alpha = 0.2 0.1
)";
  return os.str();
}

}  // namespace

TEST_CASE("cli pipeline: simulate, fit, predict, gof") {
  TempDir tmp;
  write(tmp / "model.spec", kSpecText);
  write(tmp / "study.design", design_text(60, 2));

  // simulate: artifacts + manifest, byte-identical reruns under one seed
  REQUIRE(run_cli("simulate --design " + (tmp / "study.design").string() +
                  " --seed 9 -o " + (tmp / "sim").string()) == 0);
  for (const char* f :
       {"longitudinal.csv", "survival.csv", "truth.json", "manifest.json"})
    CHECK(fs::exists(tmp / "sim" / f));
  CHECK(slurp(tmp / "sim" / "manifest.json").find("\"command\"") !=
        std::string::npos);

  REQUIRE(run_cli("simulate --design " + (tmp / "study.design").string() +
                  " --seed 9 -o " + (tmp / "sim2").string()) == 0);
  CHECK(slurp(tmp / "sim" / "longitudinal.csv") ==
        slurp(tmp / "sim2" / "longitudinal.csv"));
  CHECK(slurp(tmp / "sim" / "survival.csv") ==
        slurp(tmp / "sim2" / "survival.csv"));

  REQUIRE(run_cli("simulate --design " + (tmp / "study.design").string() +
                  " --seed 10 -o " + (tmp / "sim3").string()) == 0);
  CHECK(slurp(tmp / "sim" / "survival.csv") !=
        slurp(tmp / "sim3" / "survival.csv"));

  // fit on the simulated data
  REQUIRE(run_cli("fit --spec " + (tmp / "model.spec").string() +
                  " --longitudinal " + (tmp / "sim" / "longitudinal.csv").string() +
                  " --survival " + (tmp / "sim" / "survival.csv").string() +
                  " --qmc-points 100 -o " + (tmp / "fit").string()) == 0);
  for (const char* f : {"fit.txt", "fit.json", "manifest.json"})
    CHECK(fs::exists(tmp / "fit" / f));
  const std::string report = slurp(tmp / "fit" / "fit.txt");
  CHECK(report.find("beta.t") != std::string::npos);
  const std::string fit_json = slurp(tmp / "fit" / "fit.json");
  CHECK(fit_json.find("\"loglik\"") != std::string::npos);
  CHECK(fit_json.find("nan") == std::string::npos);

  // predict from the stored fit: plot-ready CSVs, seed-deterministic
  const std::string pred_args =
      "predict --fit " + (tmp / "fit" / "fit.json").string() +
      " --times 0 1 2 3 --draws 200 --seed 5 -o ";
  REQUIRE(run_cli(pred_args + (tmp / "pred").string()) == 0);
  REQUIRE(run_cli(pred_args + (tmp / "pred2").string()) == 0);
  CHECK(slurp(tmp / "pred" / "trajectory.csv") ==
        slurp(tmp / "pred2" / "trajectory.csv"));
  CHECK(slurp(tmp / "pred" / "trajectory.csv").find("latent") !=
        std::string::npos);
  CHECK(slurp(tmp / "pred" / "hazard_ratios.csv").find("cause.c1.alpha") !=
        std::string::npos);

  // goodness of fit
  REQUIRE(run_cli("gof --fit " + (tmp / "fit" / "fit.json").string() +
                  " --longitudinal " + (tmp / "sim" / "longitudinal.csv").string() +
                  " --survival " + (tmp / "sim" / "survival.csv").string() +
                  " --sims 60 --seed 2 -o " + (tmp / "gof").string()) == 0);
  const std::string surv = slurp(tmp / "gof" / "gof_survival.csv");
  CHECK(surv.find("observed_km") != std::string::npos);
  CHECK(std::count(surv.begin(), surv.end(), '\n') > 1);
  const std::string lon = slurp(tmp / "gof" / "gof_longitudinal.csv");
  CHECK(lon.find("predicted_mean") != std::string::npos);
}

TEST_CASE("cli simstudy emits the summary table") {
  TempDir tmp;
  write(tmp / "study.design", design_text(50, 2));
  REQUIRE(run_cli("simstudy --design " + (tmp / "study.design").string() +
                  " --qmc-points 100 -o " + (tmp / "study").string()) == 0);
  const std::string csv = slurp(tmp / "study" / "simstudy.csv");
  CHECK(csv.find("parameter") != std::string::npos);
  CHECK(csv.find("rel_bias_pct") != std::string::npos);
  CHECK(csv.find("coverage_pct") != std::string::npos);
  CHECK(csv.find("beta.t") != std::string::npos);
  CHECK(fs::exists(tmp / "study" / "manifest.json"));
}

TEST_CASE("cli errors: exit codes and machine-readable messages") {
  TempDir tmp;

  // malformed spec -> domain error, exit 2, JSON on stderr naming the line
  write(tmp / "broken.spec", "[structural]\nfixed = t\nrandom = 1\n"
                             "[marker y]\ntype = alien\n"
                             "[cause c1]\nbaseline = weibull\n"
                             "association = random_effects\n");
  write(tmp / "empty.csv", "subject,marker,time,value\n");
  const int rc = run_cli("fit --spec " + (tmp / "broken.spec").string() +
                             " --longitudinal " + (tmp / "empty.csv").string() +
                             " --survival " + (tmp / "empty.csv").string() +
                             " -o " + (tmp / "out").string(),
                         tmp / "err.json");
  CHECK(rc == 2);
  const std::string err = slurp(tmp / "err.json");
  CHECK(err.find("\"error\"") != std::string::npos);
  CHECK(err.find("line") != std::string::npos);

  // missing input file -> exit 2 with a JSON error
  const int rc2 = run_cli("simulate --design " + (tmp / "nope.design").string() +
                              " -o " + (tmp / "out2").string(),
                          tmp / "err2.json");
  CHECK(rc2 == 2);
  CHECK(slurp(tmp / "err2.json").find("\"error\"") != std::string::npos);
}
