#include "jlp/sim/simulate.hpp"

#include <cmath>
#include <limits>

#include "jlp/data/design.hpp"
#include "jlp/math/gauss_kronrod.hpp"

namespace jlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lambda_p(t | b) for a current-level cause using adaptive quadrature; the
// simulator favors accuracy over the estimator's fixed single panel.
double cl_cumulative(const CauseHazard& hz, const CauseParams& cp,
                     const Eigen::VectorXd& x_s, double alpha, double t,
                     const std::function<double(double)>& delta_at) {
  if (t <= 0.0) return 0.0;
  const double elin = std::exp(x_s.dot(cp.beta));
  return elin * adaptive_quadrature(
                    [&](double u) {
                      return hz.baseline().hazard(u, cp.baseline) *
                             std::exp(alpha * delta_at(u));
                    },
                    0.0, t, 1e-12);
}

}  // namespace

double simulate_event_time(const CauseHazard& hz, const CauseParams& cp,
                           const Eigen::VectorXd& x_s, const Eigen::VectorXd& b,
                           double u, double cap,
                           const std::function<double(double)>& delta_at) {
  if (!(u > 0.0 && u < 1.0))
    throw ValueOutOfRange("simulate_event_time needs u in (0,1)");
  const double target = -std::log(u);
  if (hz.association() == AssociationKind::RandomEffects) {
    // Lambda0(t) e^{x'beta + a'b} = target
    const double pred = x_s.dot(cp.beta) + cp.alpha.dot(b);
    return hz.baseline().inverse_cumulative(target * std::exp(-pred),
                                            cp.baseline, cap);
  }
  const double alpha = cp.alpha[0];
  auto cum = [&](double t) {
    return cl_cumulative(hz, cp, x_s, alpha, t, delta_at);
  };
  if (cum(cap) < target) return kInf;
  double lo = 0.0, hi = cap;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (cum(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, int> latent_event(const std::vector<CauseHazard>& hazards,
                                    const std::vector<CauseParams>& params,
                                    const std::vector<Eigen::VectorXd>& x_s,
                                    const Eigen::VectorXd& b, double cap,
                                    const std::function<double(double)>& delta_at,
                                    Rng& rng) {
  double best = kInf;
  int cause = 0;
  for (std::size_t p = 0; p < hazards.size(); ++p) {
    const double t = simulate_event_time(hazards[p], params[p], x_s[p], b,
                                         rng.uniform(), cap, delta_at);
    if (t < best) {
      best = t;
      cause = static_cast<int>(p) + 1;
    }
  }
  return {best, cause};
}

double simulate_marker_value(const MarkerSpec& marker, const MarkerParams& mp,
                             double delta, Rng& rng) {
  switch (marker.type) {
    case MarkerType::Gaussian:
      return mp.eta[0] + mp.eta[1] * (delta + mp.sigma * rng.normal());
    case MarkerType::Ordinal: {
      // latent propensity against the thresholds, equivalent to drawing from
      // the cumulative-probit category probabilities
      const double w = delta + mp.sigma * rng.normal();
      int m = 0;
      while (m < mp.eta.size() && w > mp.eta[m]) ++m;
      return static_cast<double>(m);
    }
    case MarkerType::Curvilinear:
      throw ConfigError("curvilinear markers are not simulated");
  }
  throw WrongMarkerNature("unknown marker type");
}

JointDataset simulate_dataset(const SimDesign& design, std::uint64_t seed) {
  ModelSpec spec = design.spec;
  JointDataset data;
  for (const auto& c : design.covariates) data.covariate_names.push_back(c.name);
  spec.bind_covariates(data.covariate_names);
  spec.validate();
  const int q = spec.q();
  const int P = spec.n_causes();
  if (design.truth.cholB.rows() != q)
    throw DimensionMismatch("simulation truth does not match the spec");
  if (!(design.horizon > 0.0) || !(design.visit_spacing > 0.0))
    throw ValueOutOfRange("simulation needs horizon > 0 and spacing > 0");

  std::vector<CauseHazard> hazards;
  for (const auto& c : spec.causes) hazards.emplace_back(c, spec);
  const double cap = 100.0 * design.horizon + design.entry_max;
  data.provenance = "simulated seed=" + std::to_string(seed);

  Rng rng(seed);
  for (int i = 0; i < design.n_subjects; ++i) {
    SubjectRecord rec;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "s%05d", i + 1);
    rec.id = idbuf;

    double tstar = 0.0;
    int cause = 0;
    Eigen::VectorXd b(q);
    long rejections = 0;
    // whole-subject rejection conditions the retained population on
    // surviving past entry (left truncation)
    for (;;) {
      rec.covariates.clear();
      for (const auto& c : design.covariates) {
        double v = 0.0;
        switch (c.kind) {
          case CovariateSim::Kind::Bernoulli:
            v = rng.uniform() < c.a ? 1.0 : 0.0;
            break;
          case CovariateSim::Kind::Uniform:
            v = c.a + (c.b - c.a) * rng.uniform();
            break;
          case CovariateSim::Kind::Normal:
            v = c.a + c.b * rng.normal();
            break;
        }
        rec.covariates.push_back(v);
      }
      Eigen::VectorXd z(q);
      for (int j = 0; j < q; ++j) z[j] = rng.normal();
      b = design.truth.cholB * z;
      rec.entry = design.entry_max > 0.0 ? design.entry_max * rng.uniform() : 0.0;

      if (P == 0) {
        tstar = kInf;
        cause = 0;
        break;
      }
      std::vector<Eigen::VectorXd> x_s(P);
      for (int p = 0; p < P; ++p)
        x_s[p] = survival_covariate_row(rec, spec.causes[p], data.covariate_names);
      auto delta_at = [&](double t) {
        return eval_terms(spec.fixed_terms, t, rec.covariates)
                   .dot(design.truth.beta) +
               eval_terms(spec.random_terms, t, rec.covariates).dot(b);
      };
      std::tie(tstar, cause) =
          latent_event(hazards, design.truth.causes, x_s, b, cap, delta_at, rng);
      if (tstar > rec.entry) break;
      if (++rejections >= 1000000)
        throw ValueOutOfRange(
            "entry conditioning rejected 1e6 draws; survival to entry is "
            "essentially impossible under this design");
    }

    const double t_end = design.horizon_from_entry ? rec.entry + design.horizon
                                                   : design.horizon;
    if (tstar <= t_end) {
      rec.time = tstar;
      rec.cause = cause;
    } else {
      rec.time = t_end;
      rec.cause = 0;
    }
    const int subject_idx = static_cast<int>(data.subjects.size());

    // visit schedule (shared by all markers)
    std::vector<double> visits;
    const double sp = design.visit_spacing;
    if (design.grid_anchored_visits) {
      for (double t = std::ceil(rec.entry / sp - 1e-12) * sp;
           t <= rec.time + 1e-12; t += sp)
        visits.push_back(std::max(t, 0.0));
    } else {
      for (double t = rec.entry; t <= rec.time + 1e-12; t += sp)
        visits.push_back(t);
    }

    for (int k = 0; k < spec.n_markers(); ++k) {
      for (double t : visits) {
        const double delta =
            eval_terms(spec.fixed_terms, t, rec.covariates).dot(design.truth.beta) +
            eval_terms(spec.random_terms, t, rec.covariates).dot(b);
        LongitudinalObservation obs;
        obs.subject = subject_idx;
        obs.marker = k;
        obs.time = std::min(t, rec.time);
        obs.value =
            simulate_marker_value(spec.markers[k], design.truth.markers[k], delta, rng);
        data.observations.push_back(obs);
      }
    }
    data.subjects.push_back(std::move(rec));
  }
  return data;
}

}  // namespace jlp
