#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jlp/data/model_spec.hpp"
#include "jlp/errors.hpp"
#include "jlp/estimation/derivatives.hpp"
#include "jlp/estimation/fit.hpp"
#include "jlp/estimation/marquardt.hpp"
#include "jlp/likelihood/engine.hpp"

using namespace jlp;

namespace {

ModelSpec table_like_spec() {
  ModelSpec spec = parse_model_spec_text(
      "[structural]\n"
      "fixed = t\n"
      "random = 1, t\n"
      "[marker y1]\n"
      "type = ordinal\n"
      "levels = 4\n"
      "[marker y2]\n"
      "type = gaussian\n"
      "[cause c1]\n"
      "baseline = weibull\n"
      "association = random_effects\n");
  spec.bind_covariates({});
  return spec;
}

ModelParams table_like_params() {
  ModelParams p = make_default_params(table_like_spec());
  p.beta = Eigen::VectorXd::Constant(1, 1.0);
  p.cholB << 1.0, 0.0, 0.0, std::sqrt(0.2);
  p.markers[0].eta.resize(3);
  p.markers[0].eta << 0.5, 1.0, 1.5;
  p.markers[0].sigma = 1.0;
  p.markers[1].eta = Eigen::Vector2d(1.0, 0.4);
  p.markers[1].sigma = 1.0;
  p.causes[0].baseline = Eigen::Vector2d(0.2, 5.0);
  p.causes[0].alpha = Eigen::Vector2d(0.1, 0.2);
  return p;
}

// small identity-link Gaussian joint model + simulated data for fast fits
struct SmallProblem {
  ModelSpec spec;
  ModelParams truth;
  JointDataset data;
};

SmallProblem small_problem(unsigned seed) {
  SmallProblem pr;
  pr.spec = parse_model_spec_text(
      "[structural]\n"
      "fixed = 1, t\n"
      "random = 1, t\n"
      "[marker y]\n"
      "type = gaussian\n"
      "link = identity\n"
      "[cause c1]\n"
      "baseline = weibull\n"
      "association = random_effects\n");
  pr.spec.bind_covariates({});
  pr.truth = make_default_params(pr.spec);
  pr.truth.beta = Eigen::Vector2d(0.3, 0.8);
  pr.truth.cholB << 0.9, 0.0, 0.1, 0.5;
  pr.truth.markers[0].eta = Eigen::Vector2d(0.0, 1.0);
  pr.truth.markers[0].sigma = 0.8;
  pr.truth.causes[0].baseline = Eigen::Vector2d(0.35, 1.6);
  pr.truth.causes[0].alpha = Eigen::Vector2d(0.2, 0.1);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uu;
  for (int i = 0; i < 80; ++i) {
    SubjectRecord s;
    s.id = "s" + std::to_string(i);
    const Eigen::Vector2d b =
        pr.truth.cholB * Eigen::Vector2d(nd(rng), nd(rng));
    // Weibull event time with the constant RE predictor, censored at 3
    const double lin = pr.truth.causes[0].alpha.dot(b);
    const double target = -std::log(uu(rng)) * std::exp(-lin);
    const double t_event = std::pow(target, 1.0 / 1.6) / 0.35;
    s.time = std::min(t_event, 3.0);
    s.cause = t_event <= 3.0 ? 1 : 0;
    const int idx = static_cast<int>(pr.data.subjects.size());
    pr.data.subjects.push_back(s);
    for (double t : {0.0, 1.0, 2.0}) {
      if (t > s.time) break;
      const double delta =
          pr.truth.beta[0] + pr.truth.beta[1] * t + b[0] + b[1] * t;
      pr.data.observations.push_back(
          {idx, 0, t, delta + pr.truth.markers[0].sigma * nd(rng)});
    }
  }
  return pr;
}

}  // namespace

TEST_CASE("pack/unpack: transforms, round-trip, pinned mask") {
  const ModelSpec spec = table_like_spec();
  const ParameterLayout layout(spec);
  const ModelParams p = table_like_params();

  const Eigen::VectorXd u = layout.pack(p);

  // thresholds (0.5, 1, 1.5) travel as (0.5, sqrt(0.5), sqrt(0.5))
  CHECK(u[layout.index_of("marker.y1.thr1")] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(u[layout.index_of("marker.y1.sqrt_incr2")] ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(u[layout.index_of("marker.y1.sqrt_incr3")] ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  // Weibull scale 0.2 travels as sqrt(0.2) = 0.447
  CHECK(u[layout.index_of("cause.c1.sqrt_scale")] ==
        doctest::Approx(0.4472135955).epsilon(1e-9));
  // pinned coordinates: beta intercept absent (fixed = t only), chol.11 = 1
  CHECK(layout.coord(layout.index_of("chol.11")).pinned);

  // round-trip identity within 1e-12
  const ModelParams back = layout.unpack(u);
  CHECK((layout.pack(back) - u).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.beta - p.beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.cholB - p.cholB).cwiseAbs().maxCoeff() < 1e-12);
  for (int k = 0; k < 2; ++k) {
    CHECK((back.markers[k].eta - p.markers[k].eta).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.markers[k].sigma == doctest::Approx(p.markers[k].sigma).epsilon(1e-12));
  }
  CHECK((back.causes[0].baseline - p.causes[0].baseline).cwiseAbs().maxCoeff() < 1e-12);

  // pinned entries survive arbitrary perturbation of the free coordinates
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  Eigen::VectorXd uf = layout.full_to_free(u);
  for (int i = 0; i < uf.size(); ++i) uf[i] += 0.3 * nd(rng);
  const ModelParams pert = layout.unpack(layout.free_to_full(uf));
  CHECK(pert.cholB(0, 0) == 1.0);
  // transforms are total: constraints hold for any unconstrained vector
  CHECK(pert.markers[0].sigma > 0.0);
  CHECK(pert.causes[0].baseline.minCoeff() > 0.0);
  CHECK(pert.markers[0].eta[1] >= pert.markers[0].eta[0]);
  CHECK(pert.markers[0].eta[2] >= pert.markers[0].eta[1]);

  // inadmissible natural parameters are rejected
  ModelParams bad = p;
  bad.markers[0].eta << 1.5, 1.0, 0.5;
  CHECK_THROWS_AS(layout.pack(bad), ConstraintViolation);
  ModelParams neg = p;
  neg.markers[0].sigma = -1.0;
  CHECK_THROWS_AS(layout.pack(neg), ConstraintViolation);
}

TEST_CASE("numerical derivatives: quadratic exactness and separability") {
  Eigen::MatrixXd A(3, 3);
  A << 4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0;
  const Eigen::Vector3d bvec(0.3, -1.0, 0.7);
  auto quad = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(A * x) + bvec.dot(x);
  };
  Eigen::VectorXd theta(3);
  theta << 0.4, -0.8, 1.3;

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  numerical_gradient_hessian(quad, theta, quad(theta), grad, hess);
  CHECK((grad - (A * theta + bvec)).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((hess - A).cwiseAbs().maxCoeff() < 1e-5);
  CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // separable objective -> diagonal Hessian (terms centered at theta so the
  // stencil values stay small and round-off cannot mimic a cross term)
  auto sep = [](const Eigen::VectorXd& x) {
    return (std::exp(x[0]) - std::exp(0.4)) + (std::pow(x[1], 4) - std::pow(0.8, 4)) +
           (std::cosh(x[2]) - std::cosh(1.3));
  };
  numerical_gradient_hessian(sep, theta, sep(theta), grad, hess);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(hess(i, j)) < 1e-8);

  // non-finite stencil points are reported
  auto nanny = [](const Eigen::VectorXd& x) {
    return x[0] > 0.4 ? std::numeric_limits<double>::quiet_NaN() : x.squaredNorm();
  };
  CHECK_THROWS_AS(
      numerical_gradient_hessian(nanny, theta, nanny(theta), grad, hess),
      NonFiniteObjective);
}

TEST_CASE("loglik gradient vs Richardson-extrapolated oracle") {
  SmallProblem pr = small_problem(21);
  EngineOptions opts;
  opts.qmc_points = 256;
  LikelihoodEngine engine(pr.spec, pr.data, opts);
  const auto& layout = engine.layout();
  Eigen::VectorXd u = layout.full_to_free(layout.pack(pr.truth));
  auto f = [&](const Eigen::VectorXd& v) { return engine.eval_free(v); };

  const Eigen::VectorXd g = numerical_gradient(f, u);

  // Richardson: g* = (4 g(h/2) - g(h)) / 3 with central differences
  const Eigen::VectorXd h = derivative_steps(u);
  Eigen::VectorXd oracle(u.size());
  for (int i = 0; i < u.size(); ++i) {
    auto central = [&](double step) {
      Eigen::VectorXd up = u, dn = u;
      up[i] += step;
      dn[i] -= step;
      return (f(up) - f(dn)) / (2.0 * step);
    };
    oracle[i] = (4.0 * central(0.5 * h[i]) - central(h[i])) / 3.0;
  }
  const double scale = std::max(1.0, oracle.cwiseAbs().maxCoeff());
  CHECK((g - oracle).cwiseAbs().maxCoeff() / scale < 1e-4);
}

TEST_CASE("marquardt: quadratic convergence, start at optimum, ascent") {
  Eigen::MatrixXd A(4, 4);
  A.setIdentity();
  A(0, 0) = 10.0;
  A(1, 0) = A(0, 1) = 2.0;
  const Eigen::VectorXd target = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  std::vector<double> accepted;
  auto quad = [&](const Eigen::VectorXd& x) {
    return 0.5 * (x - target).dot(A * (x - target));
  };

  MarquardtOptions opts;
  auto res = marquardt_minimize(quad, Eigen::VectorXd::Zero(4), opts,
                                [&](const Eigen::VectorXd& x) {
                                  accepted.push_back(quad(x));
                                });
  CHECK(res.status == OptimStatus::Converged);
  CHECK((res.theta - target).cwiseAbs().maxCoeff() < 1e-6);
  // accepted steps never increase the objective
  for (std::size_t i = 1; i < accepted.size(); ++i)
    CHECK(accepted[i] <= accepted[i - 1] + 1e-12);

  // starting at the optimum converges immediately
  auto res2 = marquardt_minimize(quad, target, opts);
  CHECK(res2.status == OptimStatus::Converged);
  CHECK(res2.iterations <= 2);
  CHECK((res2.theta - target).cwiseAbs().maxCoeff() < 1e-8);

  // all three criteria are reported and pass simultaneously
  CHECK(res.crit_theta < opts.eps_theta);
  CHECK(res.crit_value < opts.eps_value);
  CHECK(res.crit_deriv < opts.eps_deriv);
}

TEST_CASE("marquardt: iteration cap is flagged, not thrown") {
  // slow valley: tiny steps keep |dtheta| above threshold for many iters
  auto rosen = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  MarquardtOptions opts;
  opts.max_iter = 3;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  auto res = marquardt_minimize(rosen, x0, opts);
  CHECK(res.status != OptimStatus::Converged);
  CHECK(res.iterations == 3);
  CHECK(res.value < rosen(x0));  // still returns the best point
}

TEST_CASE("fit: start at truth, reproducibility, covariance") {
  SmallProblem pr = small_problem(8);
  FitOptions fo;
  fo.engine.qmc_points = 200;
  fo.init = pr.truth;

  FitResult r1 = fit(pr.spec, pr.data, fo);
  CHECK(r1.converged());
  CHECK(r1.has_covariance);
  CHECK(r1.n_free == 10);

  // asymptotic covariance: symmetric with nonnegative diagonal
  CHECK((r1.cov_free - r1.cov_free.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r1.cov_free.diagonal().minCoeff() >= 0.0);

  // identity-transform coordinate: natural ase equals unconstrained ase
  const auto& layout = LikelihoodEngine(pr.spec, pr.data, fo.engine).layout();
  const int ib = layout.index_of("beta.t");
  CHECK(r1.natural_se[ib] == doctest::Approx(r1.report_se[ib]).epsilon(1e-14));

  // estimates land near the truth (loose: one small dataset)
  CHECK(std::abs(r1.params.beta[1] - pr.truth.beta[1]) < 0.4);
  CHECK(std::abs(r1.params.markers[0].sigma - pr.truth.markers[0].sigma) < 0.3);

  // bit-identical reproducibility
  FitResult r2 = fit(pr.spec, pr.data, fo);
  CHECK(r1.loglik == r2.loglik);
  CHECK((r1.u_full - r2.u_full).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.report_se - r2.report_se).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit: stepwise init reaches the truth-start optimum") {
  SmallProblem pr = small_problem(33);
  FitOptions truth_start;
  truth_start.engine.qmc_points = 200;
  truth_start.init = pr.truth;
  FitResult a = fit(pr.spec, pr.data, truth_start);

  FitOptions stepwise;
  stepwise.engine.qmc_points = 200;
  stepwise.use_stepwise_init = true;
  FitResult b = fit(pr.spec, pr.data, stepwise);

  CHECK(a.converged());
  CHECK(b.converged());
  CHECK(b.loglik == doctest::Approx(a.loglik).epsilon(1e-3 / std::abs(a.loglik)));

  // stepwise initializer itself: admissible, alpha = 0
  ModelParams init = stepwise_init(pr.spec, pr.data, stepwise.engine);
  CHECK(init.causes[0].alpha.cwiseAbs().maxCoeff() == 0.0);
  ParameterLayout layout(pr.spec);
  CHECK(layout.pack(init).allFinite());
}

TEST_CASE("fit report and JSON round-trip") {
  SmallProblem pr = small_problem(55);
  FitOptions fo;
  fo.engine.qmc_points = 150;
  fo.init = pr.truth;
  FitResult r = fit(pr.spec, pr.data, fo);

  const std::string report = format_fit_report(r);
  CHECK(report.find("beta.t") != std::string::npos);
  CHECK(report.find("log-likelihood") != std::string::npos);

  const std::string spec_text =
      "[structural]\nfixed = 1, t\nrandom = 1, t\n[marker y]\n"
      "type = gaussian\nlink = identity\n[cause c1]\nbaseline = weibull\n"
      "association = random_effects\n";
  const std::string js = fit_to_json(r, spec_text);
  FitResult back = fit_from_json(js);
  CHECK(back.loglik == r.loglik);
  CHECK((back.u_full - r.u_full).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.has_covariance == r.has_covariance);
  CHECK((back.cov_free - r.cov_free).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.spec.n_markers() == 1);
}
