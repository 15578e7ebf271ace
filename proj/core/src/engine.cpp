#include "jlp/likelihood/engine.hpp"

#include <algorithm>
#include <cmath>

#include "jlp/data/design.hpp"
#include "jlp/likelihood/qmc.hpp"
#include "jlp/math/numerics.hpp"
#include "jlp/math/parallel.hpp"

namespace jlp {

namespace {

// Continuous markers reduce to pseudo-residuals: w_o with Sum_o
// log N((w_o - delta_o)/sigma)/sigma plus a delta-free constant. Gaussian
// markers use w = (y - eta1)/eta2; curvilinear markers use w = H(y).
struct ContinuousReduction {
  std::vector<double> w;
  double constant = 0.0;  // log-jacobians minus n*log(sigma)
  double inv_sigma = 1.0;
};

ContinuousReduction reduce_continuous(const MarkerSpec& marker,
                                      const CurvilinearLink* link,
                                      const std::vector<double>& values,
                                      const MarkerParams& p) {
  ContinuousReduction out;
  out.w.resize(values.size());
  if (!(p.sigma > 0.0)) throw DegenerateScale("marker sigma must be positive");
  out.inv_sigma = 1.0 / p.sigma;
  const double n = static_cast<double>(values.size());
  if (marker.type == MarkerType::Gaussian) {
    if (p.eta.size() != 2 || p.eta[1] == 0.0)
      throw DegenerateScale("gaussian marker requires eta2 != 0");
    const double inv_eta2 = 1.0 / p.eta[1];
    for (std::size_t o = 0; o < values.size(); ++o)
      out.w[o] = (values[o] - p.eta[0]) * inv_eta2;
    out.constant = -n * (std::log(std::abs(p.eta[1])) + std::log(p.sigma));
  } else {
    double log_jac = 0.0;
    for (std::size_t o = 0; o < values.size(); ++o) {
      auto [h, dh] = link->transform(values[o], p.eta);
      out.w[o] = h;
      log_jac += std::log(dh);
    }
    out.constant = log_jac - n * std::log(p.sigma);
  }
  return out;
}

}  // namespace

LikelihoodEngine::LikelihoodEngine(const ModelSpec& spec, const JointDataset& data,
                                   const EngineOptions& opts)
    : spec_(spec), layout_((spec_.bind_covariates(data.covariate_names),
                            spec_.validate(), spec_)),
      opts_(opts) {
  const int n = static_cast<int>(data.subjects.size());
  const int nf = spec_.n_fixed();
  const int q = spec_.q();
  const int K = spec_.n_markers();
  const int P = spec_.n_causes();
  if (opts_.qmc_points < 2)
    throw DimensionMismatch("likelihood needs at least 2 QMC points");

  for (const auto& c : spec_.causes) hazards_.emplace_back(c, spec_);
  link_index_.assign(K, -1);
  for (int k = 0; k < K; ++k)
    if (spec_.markers[k].type == MarkerType::Curvilinear) {
      link_index_[k] = static_cast<int>(links_.size());
      links_.emplace_back(spec_.markers[k]);
    }

  const bool need_nodes = spec_.any_current_level();
  subjects_.resize(n);
  subject_ids_.resize(n);
  // group observations per subject/marker first
  std::vector<std::vector<std::vector<const LongitudinalObservation*>>> grouped(n);
  for (auto& g : grouped) g.resize(K);
  for (const auto& obs : data.observations)
    grouped[obs.subject][obs.marker].push_back(&obs);

  for (int i = 0; i < n; ++i) {
    const auto& rec = data.subjects[i];
    auto& sw = subjects_[i];
    subject_ids_[i] = rec.id;
    sw.entry = rec.entry;
    sw.time = rec.time;
    sw.cause = rec.cause;
    if (rec.entry > 0.0) any_entry_ = true;

    sw.x_surv.resize(P);
    for (int pidx = 0; pidx < P; ++pidx)
      sw.x_surv[pidx] =
          survival_covariate_row(rec, spec_.causes[pidx], data.covariate_names);
    sw.xT = eval_terms(spec_.fixed_terms, rec.time, rec.covariates);
    sw.zT = eval_terms(spec_.random_terms, rec.time, rec.covariates);

    if (need_nodes && P > 0) {
      double x15[15], w15[15];
      sw.Xt.resize(15, nf);
      sw.Zt.resize(15, q);
      GaussKronrod15::map(0.0, rec.time, x15, w15);
      for (int m = 0; m < 15; ++m) {
        sw.tT[m] = x15[m];
        sw.wT[m] = w15[m];
        sw.Xt.row(m) = eval_terms(spec_.fixed_terms, x15[m], rec.covariates);
        sw.Zt.row(m) = eval_terms(spec_.random_terms, x15[m], rec.covariates);
      }
      if (rec.entry > 0.0) {
        sw.Xe.resize(15, nf);
        sw.Ze.resize(15, q);
        GaussKronrod15::map(0.0, rec.entry, x15, w15);
        for (int m = 0; m < 15; ++m) {
          sw.tE[m] = x15[m];
          sw.wE[m] = w15[m];
          sw.Xe.row(m) = eval_terms(spec_.fixed_terms, x15[m], rec.covariates);
          sw.Ze.row(m) = eval_terms(spec_.random_terms, x15[m], rec.covariates);
        }
      }
    }

    sw.markers.resize(K);
    for (int k = 0; k < K; ++k) {
      const auto& rows = grouped[i][k];
      auto& mk = sw.markers[k];
      const int no = static_cast<int>(rows.size());
      mk.values.resize(no);
      mk.X.resize(no, nf);
      mk.Z.resize(no, q);
      for (int o = 0; o < no; ++o) {
        mk.values[o] = rows[o]->value;
        mk.X.row(o) = eval_terms(spec_.fixed_terms, rows[o]->time, rec.covariates);
        mk.Z.row(o) = eval_terms(spec_.random_terms, rows[o]->time, rec.covariates);
      }
      n_obs_total_ += no;
    }
  }

  z_ = qmc_normal_draws(q, opts_.qmc_points, opts_.scramble_seed);
}

void LikelihoodEngine::marker_col(int i, int k, const ModelParams& p,
                                  const Eigen::MatrixXd& bd, double* out) const {
  const auto& mk = subjects_[i].markers[k];
  const int R = static_cast<int>(bd.cols());
  const int no = static_cast<int>(mk.values.size());
  if (no == 0) {
    std::fill(out, out + R, 0.0);
    return;
  }
  const Eigen::VectorXd xb = mk.X * p.beta;                // visits
  const Eigen::MatrixXd zb = mk.Z * bd;                    // visits x R
  const auto& marker = spec_.markers[k];
  const auto& mp = p.markers[k];
  if (marker.type == MarkerType::Ordinal) {
    const int n_thr = static_cast<int>(mp.eta.size());
    if (!(mp.sigma > 0.0)) throw DegenerateScale("ordinal sigma must be positive");
    for (int r = 0; r < R; ++r) {
      double s = 0.0;
      for (int o = 0; o < no; ++o)
        s += ordinal_log_prob_unchecked(static_cast<int>(mk.values[o]),
                                        xb[o] + zb(o, r), mp.eta.data(), n_thr,
                                        mp.sigma);
      out[r] = s;
    }
    return;
  }
  const CurvilinearLink* link =
      link_index_[k] >= 0 ? &links_[link_index_[k]] : nullptr;
  const ContinuousReduction red = reduce_continuous(marker, link, mk.values, mp);
  constexpr double kLog2Pi = 1.8378770664093454836;
  for (int r = 0; r < R; ++r) {
    double ss = 0.0;
    for (int o = 0; o < no; ++o) {
      const double z = (red.w[o] - xb[o] - zb(o, r)) * red.inv_sigma;
      ss += z * z;
    }
    out[r] = red.constant - 0.5 * (ss + no * kLog2Pi);
  }
}

void LikelihoodEngine::cause_col(int i, int pidx, const ModelParams& p,
                                 const Eigen::MatrixXd& bd, double* out_ll,
                                 double* out_tr) const {
  const auto& sw = subjects_[i];
  const auto& cp = p.causes[pidx];
  const auto& hz = hazards_[pidx];
  const int R = static_cast<int>(bd.cols());
  const double lin = sw.x_surv[pidx].dot(cp.beta);
  const bool event = (sw.cause == pidx + 1);
  const bool truncated = sw.entry > 0.0;

  if (hz.association() == AssociationKind::RandomEffects) {
    // Lambda(t|b) = Lambda0(t) e^{lin} e^{alpha'b}; closed form in b.
    const double lam0T = hz.baseline().cumulative(sw.time, cp.baseline);
    const double lam0E = truncated ? hz.baseline().cumulative(sw.entry, cp.baseline)
                                   : 0.0;
    const double log_h0T =
        event ? std::log(hz.baseline().hazard(sw.time, cp.baseline)) : 0.0;
    const Eigen::VectorXd ab = bd.transpose() * cp.alpha;  // R
    for (int r = 0; r < R; ++r) {
      const double e = std::exp(lin + ab[r]);
      out_ll[r] = -lam0T * e + (event ? log_h0T + lin + ab[r] : 0.0);
      out_tr[r] = lam0E * e;
    }
    return;
  }

  // current-level association: GK15 panel quadrature in the latent level
  const double alpha = cp.alpha[0];
  std::array<double, 15> base_T, base_E{};
  for (int m = 0; m < 15; ++m)
    base_T[m] = sw.wT[m] * hz.baseline().hazard(sw.tT[m], cp.baseline);
  if (truncated)
    for (int m = 0; m < 15; ++m)
      base_E[m] = sw.wE[m] * hz.baseline().hazard(sw.tE[m], cp.baseline);
  const Eigen::VectorXd xbT = sw.Xt * p.beta;                // 15
  const Eigen::MatrixXd zbT = sw.Zt * bd;                    // 15 x R
  Eigen::VectorXd xbE;
  Eigen::MatrixXd zbE;
  if (truncated) {
    xbE = sw.Xe * p.beta;
    zbE = sw.Ze * bd;
  }
  const double log_h0T =
      event ? std::log(hz.baseline().hazard(sw.time, cp.baseline)) : 0.0;
  const double deltaT_fixed = sw.xT.dot(p.beta);
  const Eigen::VectorXd deltaT_rand = sw.zT.transpose() * bd;  // R
  const double elin = std::exp(lin);
  for (int r = 0; r < R; ++r) {
    double cum = 0.0;
    for (int m = 0; m < 15; ++m)
      cum += base_T[m] * std::exp(alpha * (xbT[m] + zbT(m, r)));
    double ll = -cum * elin;
    if (event)
      ll += log_h0T + lin + alpha * (deltaT_fixed + deltaT_rand[r]);
    out_ll[r] = ll;
    if (truncated) {
      double cume = 0.0;
      for (int m = 0; m < 15; ++m)
        cume += base_E[m] * std::exp(alpha * (xbE[m] + zbE(m, r)));
      out_tr[r] = cume * elin;
    } else {
      out_tr[r] = 0.0;
    }
  }
}

void LikelihoodEngine::compute_all(const ModelParams& p,
                                   std::vector<Eigen::MatrixXd>& cm,
                                   std::vector<Eigen::MatrixXd>& cc,
                                   std::vector<Eigen::MatrixXd>& ct) const {
  const int n = n_subjects();
  const int R = opts_.qmc_points;
  const int K = spec_.n_markers();
  const int P = spec_.n_causes();
  const Eigen::MatrixXd bd = p.cholB * z_;  // q x R
  cm.assign(K, Eigen::MatrixXd(R, n));
  cc.assign(P, Eigen::MatrixXd(R, n));
  ct.assign(P, Eigen::MatrixXd(R, n));
  parallel_for(n, opts_.threads, [&](int i) {
    for (int k = 0; k < K; ++k) marker_col(i, k, p, bd, cm[k].col(i).data());
    for (int pidx = 0; pidx < P; ++pidx)
      cause_col(i, pidx, p, bd, cc[pidx].col(i).data(), ct[pidx].col(i).data());
  });
}

double LikelihoodEngine::reduce(const Eigen::MatrixXd& row_sum,
                                const Eigen::MatrixXd& tr_sum) const {
  const int n = n_subjects();
  const int R = static_cast<int>(row_sum.rows());
  std::vector<double> per_subject(n);
  std::vector<double> buf(R);
  parallel_for(n, 1, [&](int i) {  // cheap; keep deterministic + allocation-free
    const double num =
        log_mean_exp(std::span<const double>(row_sum.col(i).data(), R));
    if (!std::isfinite(num)) {
      if (num == -std::numeric_limits<double>::infinity())
        throw NumericalUnderflow("all QMC draws underflowed for subject " +
                                 subject_ids_[i]);
      throw NonFiniteObjective("non-finite likelihood for subject " +
                               subject_ids_[i]);
    }
    double den = 0.0;
    if (any_entry_ && subjects_[i].entry > 0.0 && spec_.n_causes() > 0) {
      for (int r = 0; r < R; ++r) buf[r] = -tr_sum(r, i);
      den = log_mean_exp(std::span<const double>(buf.data(), R));
      if (!std::isfinite(den))
        throw NumericalUnderflow("truncation denominator underflowed for subject " +
                                 subject_ids_[i]);
    }
    per_subject[i] = num - den;
  });
  KahanSum total;
  for (int i = 0; i < n; ++i) total.add(per_subject[i]);
  return total.value();
}

double LikelihoodEngine::total_loglik(const ModelParams& p) const {
  std::vector<Eigen::MatrixXd> cm, cc, ct;
  compute_all(p, cm, cc, ct);
  const int n = n_subjects();
  const int R = opts_.qmc_points;
  Eigen::MatrixXd row_sum = Eigen::MatrixXd::Zero(R, n);
  Eigen::MatrixXd tr_sum = Eigen::MatrixXd::Zero(R, n);
  for (const auto& m : cm) row_sum += m;
  for (const auto& m : cc) row_sum += m;
  for (const auto& m : ct) tr_sum += m;
  return reduce(row_sum, tr_sum);
}

double LikelihoodEngine::individual_loglik(int i, const ModelParams& p) const {
  const int R = opts_.qmc_points;
  const Eigen::MatrixXd bd = p.cholB * z_;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(R);
  Eigen::VectorXd tr = Eigen::VectorXd::Zero(R);
  Eigen::VectorXd tmp(R), tmp2(R);
  for (int k = 0; k < spec_.n_markers(); ++k) {
    marker_col(i, k, p, bd, tmp.data());
    row += tmp;
  }
  for (int pidx = 0; pidx < spec_.n_causes(); ++pidx) {
    cause_col(i, pidx, p, bd, tmp.data(), tmp2.data());
    row += tmp;
    tr += tmp2;
  }
  const double num = log_mean_exp(std::span<const double>(row.data(), R));
  double den = 0.0;
  if (subjects_[i].entry > 0.0 && spec_.n_causes() > 0) {
    tmp = -tr;
    den = log_mean_exp(std::span<const double>(tmp.data(), R));
  }
  if (!std::isfinite(num - den))
    throw NumericalUnderflow("likelihood underflow for subject " + subject_ids_[i]);
  return num - den;
}

double LikelihoodEngine::conditional_loglik(int i, const ModelParams& p,
                                            const Eigen::VectorXd& b) const {
  if (b.size() != spec_.q())
    throw DimensionMismatch("conditional_loglik: b has wrong length");
  Eigen::MatrixXd bd(spec_.q(), 1);
  bd.col(0) = b;
  double ll = 0.0, dummy = 0.0, v = 0.0;
  for (int k = 0; k < spec_.n_markers(); ++k) {
    marker_col(i, k, p, bd, &v);
    ll += v;
  }
  for (int pidx = 0; pidx < spec_.n_causes(); ++pidx) {
    cause_col(i, pidx, p, bd, &v, &dummy);
    ll += v;
  }
  return ll;
}

std::vector<int> LikelihoodEngine::dirty_blocks(const Eigen::VectorXd& u_free) const {
  std::vector<int> dirty;
  for (int b = 0; b < layout_.n_blocks(); ++b) {
    const auto [lo, hi] = layout_.block_free_range(b);
    bool changed = false;
    for (int j = lo; j < hi && !changed; ++j)
      changed = (u_free[j] != base_free_[j]);
    if (changed) dirty.push_back(b);
  }
  return dirty;
}

void LikelihoodEngine::rebase(const Eigen::VectorXd& u_free) {
  const ModelParams p = layout_.unpack(layout_.free_to_full(u_free));
  compute_all(p, c_marker_, c_cause_, c_trunc_);
  const int n = n_subjects();
  const int R = opts_.qmc_points;
  c_row_sum_ = Eigen::MatrixXd::Zero(R, n);
  c_tr_sum_ = Eigen::MatrixXd::Zero(R, n);
  for (const auto& m : c_marker_) c_row_sum_ += m;
  for (const auto& m : c_cause_) c_row_sum_ += m;
  for (const auto& m : c_trunc_) c_tr_sum_ += m;
  base_free_ = u_free;
  cache_valid_ = true;
}

double LikelihoodEngine::eval_free(const Eigen::VectorXd& u_free) {
  if (u_free.size() != layout_.n_free())
    throw DimensionMismatch("eval_free: wrong free-vector length");
  if (!cache_valid_) rebase(u_free);
  const auto dirty = dirty_blocks(u_free);
  if (dirty.empty()) return -reduce(c_row_sum_, c_tr_sum_);

  // A structural change moves the latent process under every block;
  // recompute everything into temporaries without disturbing the cache.
  bool structural = false;
  for (int b : dirty)
    if (layout_.block_kind(b) == BlockKind::Structural) structural = true;
  const ModelParams p = layout_.unpack(layout_.free_to_full(u_free));
  if (structural) {
    std::vector<Eigen::MatrixXd> cm, cc, ct;
    compute_all(p, cm, cc, ct);
    Eigen::MatrixXd row_sum = Eigen::MatrixXd::Zero(c_row_sum_.rows(),
                                                    c_row_sum_.cols());
    Eigen::MatrixXd tr_sum = row_sum;
    for (const auto& m : cm) row_sum += m;
    for (const auto& m : cc) row_sum += m;
    for (const auto& m : ct) tr_sum += m;
    n_block_recomputes_ += layout_.n_blocks();
    return -reduce(row_sum, tr_sum);
  }

  const Eigen::MatrixXd bd = p.cholB * z_;
  Eigen::MatrixXd row_sum = c_row_sum_;
  Eigen::MatrixXd tr_sum = c_tr_sum_;
  const int n = n_subjects();
  // A cached draw at -inf (underflowed probability) poisons the difference
  // update (-inf + inf = NaN), so rebuild those subjects' columns from the
  // per-block caches instead.
  std::vector<char> tainted(n, 0);
  std::vector<Eigen::MatrixXd> fm(c_marker_.size()), fc(c_cause_.size()),
      ft(c_trunc_.size());
  for (int b : dirty) {
    ++n_block_recomputes_;
    const int obj = layout_.block_object(b);
    if (layout_.block_kind(b) == BlockKind::Marker) {
      Eigen::MatrixXd fresh(row_sum.rows(), n);
      parallel_for(n, opts_.threads,
                   [&](int i) { marker_col(i, obj, p, bd, fresh.col(i).data()); });
      for (int i = 0; i < n; ++i)
        if (!c_marker_[obj].col(i).allFinite()) tainted[i] = 1;
      row_sum += fresh - c_marker_[obj];
      fm[obj] = std::move(fresh);
    } else {
      Eigen::MatrixXd fresh(row_sum.rows(), n), fresh_tr(row_sum.rows(), n);
      parallel_for(n, opts_.threads, [&](int i) {
        cause_col(i, obj, p, bd, fresh.col(i).data(), fresh_tr.col(i).data());
      });
      for (int i = 0; i < n; ++i)
        if (!c_cause_[obj].col(i).allFinite() ||
            !c_trunc_[obj].col(i).allFinite())
          tainted[i] = 1;
      row_sum += fresh - c_cause_[obj];
      tr_sum += fresh_tr - c_trunc_[obj];
      fc[obj] = std::move(fresh);
      ft[obj] = std::move(fresh_tr);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!tainted[i]) continue;
    row_sum.col(i).setZero();
    tr_sum.col(i).setZero();
    for (std::size_t m = 0; m < c_marker_.size(); ++m)
      row_sum.col(i) += (fm[m].size() ? fm[m] : c_marker_[m]).col(i);
    for (std::size_t c = 0; c < c_cause_.size(); ++c) {
      row_sum.col(i) += (fc[c].size() ? fc[c] : c_cause_[c]).col(i);
      tr_sum.col(i) += (ft[c].size() ? ft[c] : c_trunc_[c]).col(i);
    }
  }
  return -reduce(row_sum, tr_sum);
}

}  // namespace jlp
