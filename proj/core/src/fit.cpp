#include "jlp/estimation/fit.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "jlp/data/design.hpp"
#include "jlp/math/numerics.hpp"

namespace jlp {

namespace {

using nlohmann::json;

// Survival submodel without latent dependency: lambda_p(t) = lambda_0p(t)
// exp(x' beta). Parameters travel as (sqrt baseline..., beta...) per cause.
struct SurvivalOnly {
  const ModelSpec* spec;
  const JointDataset* data;
  std::vector<BaselineHazard> base;
  std::vector<std::vector<Eigen::VectorXd>> x;  // subject x cause
  std::vector<int> offsets;                     // coord offset per cause
  int total = 0;

  explicit SurvivalOnly(const ModelSpec& s, const JointDataset& d)
      : spec(&s), data(&d) {
    for (const auto& c : s.causes) {
      base.emplace_back(c);
      offsets.push_back(total);
      total += c.baseline_param_count() + static_cast<int>(c.covariates.size());
    }
    x.resize(d.subjects.size());
    for (std::size_t i = 0; i < d.subjects.size(); ++i)
      for (const auto& c : s.causes)
        x[i].push_back(survival_covariate_row(d.subjects[i], c, d.covariate_names));
  }

  double operator()(const Eigen::VectorXd& u) const {
    KahanSum nll;
    for (std::size_t i = 0; i < data->subjects.size(); ++i) {
      const auto& rec = data->subjects[i];
      for (int p = 0; p < spec->n_causes(); ++p) {
        const int nb = base[p].n_params();
        Eigen::VectorXd bp = u.segment(offsets[p], nb).array().square();
        for (int j = 0; j < nb; ++j) bp[j] = std::max(bp[j], 1e-10);
        const Eigen::VectorXd beta =
            u.segment(offsets[p] + nb, static_cast<int>(x[i][p].size()));
        const double lin = x[i][p].dot(beta);
        double ll = -(base[p].cumulative(rec.time, bp) -
                      base[p].cumulative(rec.entry, bp)) *
                    std::exp(lin);
        if (rec.cause == p + 1)
          ll += std::log(base[p].hazard(rec.time, bp)) + lin;
        nll.add(-ll);
      }
    }
    return nll.value();
  }
};

}  // namespace

ModelParams stepwise_init(const ModelSpec& spec, const JointDataset& data,
                          const EngineOptions& opts) {
  ModelSpec bound = spec;
  bound.bind_covariates(data.covariate_names);
  ModelParams init = make_default_params(bound);

  // 1. survival submodel with alpha = 0
  if (bound.n_causes() > 0) {
    SurvivalOnly surv(bound, data);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(surv.total);
    for (int p = 0; p < bound.n_causes(); ++p)
      u0.segment(surv.offsets[p], surv.base[p].n_params()).setOnes();
    MarquardtOptions mo;
    mo.max_iter = 200;
    auto res = marquardt_minimize([&](const Eigen::VectorXd& u) { return surv(u); },
                                  u0, mo);
    for (int p = 0; p < bound.n_causes(); ++p) {
      const int nb = surv.base[p].n_params();
      init.causes[p].baseline =
          res.theta.segment(surv.offsets[p], nb).array().square().max(1e-10).matrix();
      init.causes[p].beta = res.theta.segment(
          surv.offsets[p] + nb, init.causes[p].beta.size());
      init.causes[p].alpha.setZero();
    }
  }

  // 2. longitudinal submodel (causes dropped)
  if (bound.n_markers() > 0 && !data.observations.empty()) {
    ModelSpec longi = bound;
    longi.causes.clear();
    EngineOptions eo = opts;
    LikelihoodEngine engine(longi, data, eo);
    const auto& layout = engine.layout();
    ModelParams lp = make_default_params(longi);
    const Eigen::VectorXd u0 = layout.full_to_free(layout.pack(lp));
    MarquardtOptions mo;  // defaults; a looser fit would also do here
    auto res = marquardt_minimize(
        [&](const Eigen::VectorXd& u) { return engine.eval_free(u); }, u0, mo,
        [&](const Eigen::VectorXd& u) { engine.rebase(u); });
    const ModelParams est = layout.unpack(layout.free_to_full(res.theta));
    init.beta = est.beta;
    init.cholB = est.cholB;
    init.markers = est.markers;
  }
  return init;
}

FitResult fit(const ModelSpec& spec, const JointDataset& data,
              const FitOptions& opts) {
  LikelihoodEngine engine(spec, data, opts.engine);
  const auto& layout = engine.layout();

  ModelParams init;
  if (opts.init.has_value())
    init = *opts.init;
  else if (opts.use_stepwise_init)
    init = stepwise_init(spec, data, opts.engine);
  else
    init = make_default_params(engine.spec());

  const Eigen::VectorXd u0 = layout.full_to_free(layout.pack(init));
  auto res = marquardt_minimize(
      [&](const Eigen::VectorXd& u) { return engine.eval_free(u); }, u0,
      opts.optim, [&](const Eigen::VectorXd& u) { engine.rebase(u); });

  // The Cholesky factor is identified only up to column signs; fold the
  // diagonal to be nonnegative so replicated fits aggregate on one gauge.
  {
    const ModelParams prm = layout.unpack(layout.free_to_full(res.theta));
    const int q = engine.spec().q();
    for (int j = 0; j < q; ++j) {
      if (prm.cholB(j, j) >= 0.0) continue;
      for (int i = j; i < q; ++i) {
        const int full = layout.index_of("chol." + std::to_string(i + 1) +
                                         std::to_string(j + 1));
        const int fr = layout.free_index(full);
        if (fr < 0) continue;
        res.theta[fr] = -res.theta[fr];
        res.hess.row(fr) *= -1.0;
        res.hess.col(fr) *= -1.0;
      }
    }
  }

  FitResult out;
  out.spec = engine.spec();
  out.covariate_names = data.covariate_names;
  out.u_full = layout.free_to_full(res.theta);
  out.params = layout.unpack(out.u_full);
  out.loglik = -res.value;
  out.n_free = layout.n_free();
  out.aic = 2.0 * out.n_free - 2.0 * out.loglik;
  out.iterations = res.iterations;
  out.status = res.status;
  out.crit_theta = res.crit_theta;
  out.crit_value = res.crit_value;
  out.crit_deriv = res.crit_deriv;
  out.seed = opts.engine.scramble_seed;
  out.qmc_points = opts.engine.qmc_points;

  out.report_est = layout.report_values(out.u_full);
  out.natural_est = layout.natural_values(out.u_full);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::LLT<Eigen::MatrixXd> llt(res.hess);
  if (llt.info() == Eigen::Success) {
    out.cov_free = llt.solve(Eigen::MatrixXd::Identity(out.n_free, out.n_free));
    out.has_covariance = true;
    out.report_se = layout.report_ase(out.u_full, out.cov_free);
    out.natural_se = layout.natural_ase(out.u_full, out.cov_free);
  } else {
    // SingularHessian condition: estimates are returned without covariance
    out.cov_free = Eigen::MatrixXd::Constant(out.n_free, out.n_free, nan);
    out.report_se = Eigen::VectorXd::Constant(layout.total(), nan);
    out.natural_se = Eigen::VectorXd::Constant(layout.total(), nan);
  }
  return out;
}

std::string format_fit_report(const FitResult& fit) {
  ParameterLayout layout(fit.spec);
  std::ostringstream os;
  os << "joint latent-process model fit\n";
  os << "  log-likelihood: " << fit.loglik << "\n";
  os << "  AIC:            " << fit.aic << "\n";
  os << "  free params:    " << fit.n_free << "\n";
  os << "  iterations:     " << fit.iterations << "\n";
  const char* status = fit.status == OptimStatus::Converged ? "converged"
                       : fit.status == OptimStatus::Stalled ? "stalled"
                                                            : "max-iterations";
  os << "  status:         " << status << "\n";
  os << "  criteria:       theta=" << fit.crit_theta
     << " loglik=" << fit.crit_value << " rdm=" << fit.crit_deriv << "\n";
  os << "  qmc points:     " << fit.qmc_points << " (seed " << fit.seed << ")\n";
  if (!fit.has_covariance)
    os << "  WARNING: singular Hessian, no covariance available\n";
  os << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "  %-22s %12s %12s %12s %12s\n", "parameter",
                "estimate", "ase", "ci95.lo", "ci95.hi");
  os << line;
  for (int i = 0; i < layout.total(); ++i) {
    const auto& c = layout.coord(i);
    if (c.pinned) {
      std::snprintf(line, sizeof(line), "  %-22s %12.5f %12s %12s %12s\n",
                    c.name.c_str(), fit.report_est[i], "(fixed)", "", "");
    } else {
      const double se = fit.report_se[i];
      std::snprintf(line, sizeof(line), "  %-22s %12.5f %12.5f %12.5f %12.5f\n",
                    c.name.c_str(), fit.report_est[i], se,
                    fit.report_est[i] - 1.96 * se, fit.report_est[i] + 1.96 * se);
    }
    os << line;
  }
  return os.str();
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int r = static_cast<int>(j.size());
  const int c = r == 0 ? 0 : static_cast<int>(j[0].size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

std::string fit_to_json(const FitResult& fit, const std::string& spec_text) {
  ParameterLayout layout(fit.spec);
  json j;
  j["spec_text"] = spec_text;
  j["covariate_names"] = fit.covariate_names;
  j["u_full"] = vector_to_json(fit.u_full);
  j["report_est"] = vector_to_json(fit.report_est);
  j["report_se"] = vector_to_json(fit.report_se);
  j["natural_est"] = vector_to_json(fit.natural_est);
  j["natural_se"] = vector_to_json(fit.natural_se);
  j["cov_free"] = matrix_to_json(fit.cov_free);
  j["has_covariance"] = fit.has_covariance;
  j["loglik"] = fit.loglik;
  j["aic"] = fit.aic;
  j["n_free"] = fit.n_free;
  j["iterations"] = fit.iterations;
  j["status"] = fit.status == OptimStatus::Converged ? "converged"
                : fit.status == OptimStatus::Stalled ? "stalled"
                                                     : "max-iterations";
  j["crit_theta"] = fit.crit_theta;
  j["crit_value"] = fit.crit_value;
  j["crit_deriv"] = fit.crit_deriv;
  j["seed"] = fit.seed;
  j["qmc_points"] = fit.qmc_points;
  json names = json::array();
  for (int i = 0; i < layout.total(); ++i) names.push_back(layout.name(i));
  j["parameter_names"] = names;
  return j.dump(2);
}

FitResult fit_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid fit JSON: ") + e.what());
  }
  FitResult out;
  out.spec = parse_model_spec_text(j.at("spec_text").get<std::string>());
  out.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  out.spec.bind_covariates(out.covariate_names);
  out.u_full = vector_from_json(j.at("u_full"));
  out.report_est = vector_from_json(j.at("report_est"));
  out.report_se = vector_from_json(j.at("report_se"));
  out.natural_est = vector_from_json(j.at("natural_est"));
  out.natural_se = vector_from_json(j.at("natural_se"));
  out.cov_free = matrix_from_json(j.at("cov_free"));
  out.has_covariance = j.at("has_covariance").get<bool>();
  out.loglik = j.at("loglik").get<double>();
  out.aic = j.at("aic").get<double>();
  out.n_free = j.at("n_free").get<int>();
  out.iterations = j.at("iterations").get<int>();
  const std::string st = j.at("status").get<std::string>();
  out.status = st == "converged" ? OptimStatus::Converged
               : st == "stalled" ? OptimStatus::Stalled
                                 : OptimStatus::MaxIterations;
  out.crit_theta = j.at("crit_theta").get<double>();
  out.crit_value = j.at("crit_value").get<double>();
  out.crit_deriv = j.at("crit_deriv").get<double>();
  out.seed = j.at("seed").get<std::uint64_t>();
  out.qmc_points = j.at("qmc_points").get<int>();
  ParameterLayout layout(out.spec);
  out.params = layout.unpack(out.u_full);
  return out;
}

}  // namespace jlp
