#include "jlp/postfit/postfit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "jlp/data/design.hpp"
#include "jlp/math/parallel.hpp"

namespace jlp {

namespace {


double percentile(std::vector<double>& v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * (static_cast<double>(v.size()) - 1.0);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

// inverse of the monotone curvilinear link by bisection on its support
double invert_link(const CurvilinearLink& link, const MarkerSpec& marker,
                   const Eigen::VectorXd& eta, double target) {
  double lo = marker.link_knots.front(), hi = marker.link_knots.back();
  if (target <= link.transform(lo, eta).first) return lo;
  if (target >= link.transform(hi, eta).first) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (link.transform(mid, eta).first < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double item_level(const ModelSpec& spec, int k, const MarkerParams& mp,
                  const CurvilinearLink* link, double delta) {
  const auto& marker = spec.markers[k];
  switch (marker.type) {
    case MarkerType::Gaussian:
      return mp.eta[0] + mp.eta[1] * delta;
    case MarkerType::Ordinal:
      return expected_item_level(marker, mp, delta);
    case MarkerType::Curvilinear:
      // median of Y given Delta: H^{-1}(Delta)
      return invert_link(*link, marker, mp.eta, delta);
  }
  throw WrongMarkerNature("unknown marker type");
}

}  // namespace

double expected_item_level(const MarkerSpec& marker, const MarkerParams& mp,
                           double delta) {
  if (marker.type != MarkerType::Ordinal)
    throw WrongMarkerNature("expected_item_level requires an ordinal marker");
  double e = 0.0;
  for (int m = 1; m <= marker.max_level(); ++m)
    e += m * ordinal_category_prob(m, delta, mp.eta, mp.sigma);
  return e;
}

TrajectoryPrediction predict_trajectory(const FitResult& fit,
                                        const std::vector<double>& covariates,
                                        const std::vector<double>& times,
                                        int n_draws, std::uint64_t seed) {
  if (!fit.has_covariance)
    throw NoCovariance("predict_trajectory needs a fit with covariance");
  if (covariates.size() != fit.covariate_names.size())
    throw DimensionMismatch("profile covariates do not match the fit");
  const ModelSpec& spec = fit.spec;
  const ParameterLayout layout(spec);
  const int K = spec.n_markers();
  const int nt = static_cast<int>(times.size());

  std::vector<CurvilinearLink> links;
  std::vector<int> link_idx(K, -1);
  for (int k = 0; k < K; ++k)
    if (spec.markers[k].type == MarkerType::Curvilinear) {
      link_idx[k] = static_cast<int>(links.size());
      links.emplace_back(spec.markers[k]);
    }

  TrajectoryPrediction out;
  out.covariates = covariates;
  out.times = times;
  out.item.resize(K);
  out.item_lo.resize(K);
  out.item_hi.resize(K);

  auto evaluate = [&](const ModelParams& p, std::vector<double>& latent,
                      std::vector<std::vector<double>>& items) {
    latent.resize(nt);
    items.assign(K, std::vector<double>(nt));
    for (int t = 0; t < nt; ++t) {
      latent[t] =
          eval_terms(spec.fixed_terms, times[t], covariates).dot(p.beta);
      for (int k = 0; k < K; ++k)
        items[k][t] = item_level(
            spec, k, p.markers[k],
            link_idx[k] >= 0 ? &links[link_idx[k]] : nullptr, latent[t]);
    }
  };

  std::vector<std::vector<double>> point_items;
  evaluate(fit.params, out.latent, point_items);
  for (int k = 0; k < K; ++k) out.item[k] = point_items[k];

  // draws on the unconstrained scale, mapped back through unpack (total)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.cov_free);
  if (es.info() != Eigen::Success)
    throw NoCovariance("covariance eigendecomposition failed");
  const Eigen::MatrixXd root =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Eigen::VectorXd center = layout.full_to_free(fit.u_full);
  Rng rng(seed);
  std::vector<std::vector<double>> lat_draws(nt);
  std::vector<std::vector<std::vector<double>>> item_draws(
      K, std::vector<std::vector<double>>(nt));
  Eigen::VectorXd zvec(center.size());
  std::vector<double> lat;
  std::vector<std::vector<double>> items;
  for (int d = 0; d < n_draws; ++d) {
    for (int j = 0; j < zvec.size(); ++j) zvec[j] = rng.normal();
    const Eigen::VectorXd u = center + root * zvec;
    const ModelParams p = layout.unpack(layout.free_to_full(u));
    evaluate(p, lat, items);
    for (int t = 0; t < nt; ++t) {
      lat_draws[t].push_back(lat[t]);
      for (int k = 0; k < K; ++k) item_draws[k][t].push_back(items[k][t]);
    }
  }
  out.latent_lo.resize(nt);
  out.latent_hi.resize(nt);
  for (int k = 0; k < K; ++k) {
    out.item_lo[k].resize(nt);
    out.item_hi[k].resize(nt);
  }
  for (int t = 0; t < nt; ++t) {
    out.latent_lo[t] = std::min(percentile(lat_draws[t], 0.025), out.latent[t]);
    out.latent_hi[t] = std::max(percentile(lat_draws[t], 0.975), out.latent[t]);
    for (int k = 0; k < K; ++k) {
      out.item_lo[k][t] =
          std::min(percentile(item_draws[k][t], 0.025), out.item[k][t]);
      out.item_hi[k][t] =
          std::max(percentile(item_draws[k][t], 0.975), out.item[k][t]);
    }
  }
  return out;
}

std::vector<HazardRatioRow> hazard_ratio_table(const FitResult& fit) {
  if (!fit.has_covariance)
    throw NoCovariance("hazard_ratio_table needs a fit with covariance");
  const ParameterLayout layout(fit.spec);
  std::vector<HazardRatioRow> rows;
  for (int i = 0; i < layout.total(); ++i) {
    const auto& c = layout.coord(i);
    if (c.pinned || layout.block_kind(c.block) != BlockKind::Cause) continue;
    const bool is_beta = c.name.find(".beta.") != std::string::npos;
    const bool is_alpha = c.name.find(".alpha") != std::string::npos;
    if (!is_beta && !is_alpha) continue;
    HazardRatioRow row;
    row.cause = fit.spec.causes[layout.block_object(c.block)].name;
    row.term = c.name;
    row.coef = fit.report_est[i];
    row.ase = fit.report_se[i];
    row.hr = std::exp(row.coef);
    row.lo = std::exp(row.coef - 1.96 * row.ase);
    row.hi = std::exp(row.coef + 1.96 * row.ase);
    rows.push_back(std::move(row));
  }
  return rows;
}

PosteriorMode posterior_random_effects(const FitResult& fit,
                                       const LikelihoodEngine& engine,
                                       int subject, int max_iter) {
  const int q = fit.spec.q();
  const Eigen::MatrixXd& L = fit.params.cholB;
  // -log posterior kernel: -(loglik(data | b) + log N(b; 0, B))
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd w = L.triangularView<Eigen::Lower>().solve(b);
    return -engine.conditional_loglik(subject, fit.params, b) + 0.5 * w.squaredNorm();
  };
  MarquardtOptions mo;
  mo.max_iter = max_iter;
  PosteriorMode out;
  try {
    auto res = marquardt_minimize(objective, Eigen::VectorXd::Zero(q), mo);
    if (res.status == OptimStatus::MaxIterations) {
      out.b = Eigen::VectorXd::Zero(q);
      out.converged = false;
    } else {
      out.b = res.theta;
    }
  } catch (const Error&) {
    out.b = Eigen::VectorXd::Zero(q);
    out.converged = false;
  }
  return out;
}

KaplanMeier kaplan_meier(const std::vector<double>& entry,
                         const std::vector<double>& time,
                         const std::vector<int>& event) {
  if (entry.size() != time.size() || time.size() != event.size())
    throw DimensionMismatch("kaplan_meier input sizes differ");
  std::map<double, int> deaths;
  for (std::size_t i = 0; i < time.size(); ++i)
    if (event[i] != 0) ++deaths[time[i]];
  KaplanMeier km;
  double s = 1.0;
  for (const auto& [t, d] : deaths) {
    int at_risk = 0;
    for (std::size_t i = 0; i < time.size(); ++i)
      if (entry[i] < t && time[i] >= t) ++at_risk;
    if (at_risk > 0) s *= 1.0 - static_cast<double>(d) / at_risk;
    km.times.push_back(t);
    km.survival.push_back(s);
  }
  return km;
}

double KaplanMeier::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

GofReport gof_report(const FitResult& fit, const JointDataset& data, int n_sim,
                     double bin_width, std::uint64_t seed, int threads) {
  const ModelSpec& spec = fit.spec;
  const int P = spec.n_causes();
  const int n = static_cast<int>(data.subjects.size());
  GofReport out;

  if (P > 0 && n > 0) {
    std::vector<double> entries(n), times(n);
    std::vector<int> events(n);
    double horizon = 0.0;
    for (int i = 0; i < n; ++i) {
      entries[i] = data.subjects[i].entry;
      times[i] = data.subjects[i].time;
      events[i] = data.subjects[i].cause > 0 ? 1 : 0;
      horizon = std::max(horizon, times[i] - entries[i]);
    }
    const KaplanMeier observed = kaplan_meier(entries, times, events);
    const std::vector<double>& grid = observed.times;

    std::vector<CauseHazard> hazards;
    for (const auto& c : spec.causes) hazards.emplace_back(c, spec);
    std::vector<std::vector<Eigen::VectorXd>> x_s(n);
    for (int i = 0; i < n; ++i)
      for (const auto& c : spec.causes)
        x_s[i].push_back(
            survival_covariate_row(data.subjects[i], c, data.covariate_names));
    const double cap = 100.0 * horizon + 10.0;

    // envelope of KM curves from datasets simulated at theta-hat with the
    // observed covariates and entry times (parametric bootstrap)
    Eigen::MatrixXd sims(n_sim, static_cast<int>(grid.size()));
    parallel_for(n_sim, threads, [&](int s) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
      std::vector<double> st(n);
      std::vector<int> se(n);
      const int q = spec.q();
      Eigen::VectorXd b(q);
      for (int i = 0; i < n; ++i) {
        const auto& rec = data.subjects[i];
        double tstar = 0.0;
        int cause = 0;
        long rejections = 0;
        for (;;) {
          for (int j = 0; j < q; ++j) b[j] = rng.normal();
          b = (fit.params.cholB * b).eval();
          auto delta_at = [&](double t) {
            return eval_terms(spec.fixed_terms, t, rec.covariates)
                       .dot(fit.params.beta) +
                   eval_terms(spec.random_terms, t, rec.covariates).dot(b);
          };
          std::tie(tstar, cause) = latent_event(hazards, fit.params.causes,
                                                x_s[i], b, cap, delta_at, rng);
          if (tstar > rec.entry) break;
          if (++rejections >= 1000000)
            throw ValueOutOfRange("gof simulation: entry conditioning stuck");
        }
        const double t_end = rec.entry + horizon;
        st[i] = std::min(tstar, t_end);
        se[i] = tstar <= t_end ? (cause > 0 ? 1 : 0) : 0;
      }
      const KaplanMeier km = kaplan_meier(entries, st, se);
      for (std::size_t g = 0; g < grid.size(); ++g)
        sims(s, static_cast<int>(g)) = km.at(grid[g]);
    });
    for (std::size_t g = 0; g < grid.size(); ++g) {
      GofSurvivalRow row;
      row.time = grid[g];
      row.observed = observed.survival[g];
      std::vector<double> col(sims.col(static_cast<int>(g)).data(),
                              sims.col(static_cast<int>(g)).data() + n_sim);
      row.lo = percentile(col, 0.025);
      row.hi = percentile(col, 0.975);
      out.survival.push_back(row);
    }
  }

  // longitudinal: observed vs subject-specific predicted means per time bin
  if (spec.n_markers() > 0 && !data.observations.empty()) {
    EngineOptions eo;
    eo.qmc_points = 2;  // conditional_loglik only; draws unused
    LikelihoodEngine engine(spec, data, eo);
    std::vector<Eigen::VectorXd> modes(n);
    parallel_for(n, threads, [&](int i) {
      modes[i] = posterior_random_effects(fit, engine, i).b;
    });
    std::vector<CurvilinearLink> links;
    std::vector<int> link_idx(spec.n_markers(), -1);
    for (int k = 0; k < spec.n_markers(); ++k)
      if (spec.markers[k].type == MarkerType::Curvilinear) {
        link_idx[k] = static_cast<int>(links.size());
        links.emplace_back(spec.markers[k]);
      }
    struct Acc {
      int n = 0;
      double obs = 0.0, pred = 0.0;
    };
    std::map<std::pair<int, int>, Acc> bins;
    for (const auto& obs : data.observations) {
      const auto& rec = data.subjects[obs.subject];
      const double delta =
          eval_terms(spec.fixed_terms, obs.time, rec.covariates)
              .dot(fit.params.beta) +
          eval_terms(spec.random_terms, obs.time, rec.covariates)
              .dot(modes[obs.subject]);
      const double pred = item_level(
          spec, obs.marker, fit.params.markers[obs.marker],
          link_idx[obs.marker] >= 0 ? &links[link_idx[obs.marker]] : nullptr,
          delta);
      auto& acc =
          bins[{obs.marker, static_cast<int>(std::floor(obs.time / bin_width))}];
      ++acc.n;
      acc.obs += obs.value;
      acc.pred += pred;
    }
    for (const auto& [key, acc] : bins) {
      GofLongitudinalRow row;
      row.marker = key.first;
      row.bin_lo = key.second * bin_width;
      row.bin_hi = row.bin_lo + bin_width;
      row.n = acc.n;
      row.observed_mean = acc.obs / acc.n;
      row.predicted_mean = acc.pred / acc.n;
      out.longitudinal.push_back(row);
    }
  }
  return out;
}

}  // namespace jlp
