#include "jlp/model/parameters.hpp"

#include <cmath>

#include "jlp/errors.hpp"

namespace jlp {

namespace {

int curvilinear_basis_size(const MarkerSpec& m) {
  if (m.link_knots.empty()) return 1;  // affine link: single slope weight
  // quadratic I-spline basis: interior knots + order 3
  return static_cast<int>(m.link_knots.size()) - 2 + 3;
}

int marker_eta_size(const MarkerSpec& m) {
  switch (m.type) {
    case MarkerType::Gaussian:
      return 2;
    case MarkerType::Ordinal:
      return m.max_level();
    case MarkerType::Curvilinear:
      return 1 + curvilinear_basis_size(m);
  }
  return 0;
}

}  // namespace

ModelParams make_default_params(const ModelSpec& spec) {
  ModelParams p;
  p.beta = Eigen::VectorXd::Zero(spec.n_fixed());
  p.cholB = Eigen::MatrixXd::Identity(spec.q(), spec.q());
  for (const auto& m : spec.markers) {
    MarkerParams mp;
    mp.eta = Eigen::VectorXd::Zero(marker_eta_size(m));
    if (m.type == MarkerType::Gaussian) mp.eta << 0.0, 1.0;
    if (m.type == MarkerType::Ordinal)
      for (int i = 0; i < mp.eta.size(); ++i) mp.eta[i] = -1.0 + 2.0 * (i + 1) / (mp.eta.size() + 1);
    if (m.type == MarkerType::Curvilinear)
      for (int i = 1; i < mp.eta.size(); ++i) mp.eta[i] = 1.0;
    mp.sigma = 1.0;
    p.markers.push_back(std::move(mp));
  }
  for (const auto& c : spec.causes) {
    CauseParams cp;
    cp.baseline = Eigen::VectorXd::Ones(c.baseline_param_count());
    cp.beta = Eigen::VectorXd::Zero(static_cast<int>(c.covariates.size()));
    cp.alpha = Eigen::VectorXd::Zero(
        c.association == AssociationKind::RandomEffects ? spec.q() : 1);
    p.causes.push_back(std::move(cp));
  }
  return p;
}

ParameterLayout::ParameterLayout(const ModelSpec& spec) : spec_(spec) {
  const bool constrained = spec_.constrained_scale();
  const int q = spec_.q();

  auto begin_block = [&](BlockKind kind, int object) {
    block_kinds_.push_back(kind);
    block_objects_.push_back(object);
    return n_blocks_++;
  };
  auto add = [&](std::string name, int block, CoordTransform tr, ReportScale rs,
                 bool pinned = false, double pinned_value = 0.0) {
    coords_.push_back(CoordInfo{std::move(name), block, tr, rs, pinned, pinned_value});
  };

  {
    const int b = begin_block(BlockKind::Structural, -1);
    for (int i = 0; i < spec_.n_fixed(); ++i) {
      const auto& tm = spec_.fixed_terms[i];
      const bool is_intercept =
          tm.factors.size() == 1 && tm.factors[0].kind == TermFactor::Kind::One;
      add("beta." + tm.label, b, CoordTransform::Identity, ReportScale::Natural,
          constrained && is_intercept, 0.0);
    }
    for (int i = 0; i < q; ++i)
      for (int j = 0; j <= i; ++j)
        add("chol." + std::to_string(i + 1) + std::to_string(j + 1), b,
            CoordTransform::Identity, ReportScale::Natural,
            constrained && i == 0 && j == 0, 1.0);
  }

  for (int k = 0; k < spec_.n_markers(); ++k) {
    const auto& m = spec_.markers[k];
    const int b = begin_block(BlockKind::Marker, k);
    const std::string pre = "marker." + m.name + ".";
    switch (m.type) {
      case MarkerType::Gaussian:
        add(pre + "eta1", b, CoordTransform::Identity, ReportScale::Natural,
            m.identity_link, 0.0);
        add(pre + "eta2", b, CoordTransform::Identity, ReportScale::Natural,
            m.identity_link, 1.0);
        break;
      case MarkerType::Ordinal:
        add(pre + "thr1", b, CoordTransform::Identity, ReportScale::Natural);
        for (int mth = 2; mth <= m.max_level(); ++mth)
          add(pre + "sqrt_incr" + std::to_string(mth), b,
              CoordTransform::ThresholdIncrement, ReportScale::Unconstrained);
        break;
      case MarkerType::Curvilinear:
        add(pre + "link0", b, CoordTransform::Identity, ReportScale::Natural);
        for (int i = 1; i <= curvilinear_basis_size(m); ++i)
          add(pre + "sqrt_link" + std::to_string(i), b, CoordTransform::Square,
              ReportScale::Unconstrained);
        break;
    }
    add(pre + "sigma", b, CoordTransform::Square, ReportScale::Natural);
  }

  for (int p = 0; p < spec_.n_causes(); ++p) {
    const auto& c = spec_.causes[p];
    const int b = begin_block(BlockKind::Cause, p);
    const std::string pre = "cause." + c.name + ".";
    switch (c.family) {
      case BaselineFamily::Weibull:
        add(pre + "sqrt_scale", b, CoordTransform::Square, ReportScale::Unconstrained);
        add(pre + "sqrt_shape", b, CoordTransform::Square, ReportScale::Unconstrained);
        break;
      case BaselineFamily::PiecewiseConstant:
        for (int i = 1; i <= c.baseline_param_count(); ++i)
          add(pre + "sqrt_height" + std::to_string(i), b, CoordTransform::Square,
              ReportScale::Unconstrained);
        break;
      case BaselineFamily::MSplines:
        for (int i = 1; i <= c.baseline_param_count(); ++i)
          add(pre + "sqrt_coef" + std::to_string(i), b, CoordTransform::Square,
              ReportScale::Unconstrained);
        break;
    }
    for (const auto& cov : c.covariates)
      add(pre + "beta." + cov, b, CoordTransform::Identity, ReportScale::Natural);
    if (c.association == AssociationKind::RandomEffects) {
      for (int i = 0; i < q; ++i)
        add(pre + "alpha." + spec_.random_terms[i].label, b,
            CoordTransform::Identity, ReportScale::Natural);
    } else {
      add(pre + "alpha", b, CoordTransform::Identity, ReportScale::Natural);
    }
  }

  free_index_.assign(coords_.size(), -1);
  block_free_ranges_.assign(n_blocks_, {0, 0});
  int prev_block = -1;
  for (int i = 0; i < total(); ++i) {
    if (coords_[i].pinned) continue;
    if (coords_[i].block != prev_block) {
      block_free_ranges_[coords_[i].block].first = n_free_;
      prev_block = coords_[i].block;
    }
    free_index_[i] = n_free_++;
    block_free_ranges_[coords_[i].block].second = n_free_;
  }
}

int ParameterLayout::index_of(const std::string& name) const {
  for (int i = 0; i < total(); ++i)
    if (coords_[i].name == name) return i;
  throw ConfigError("unknown parameter name '" + name + "'");
}

Eigen::VectorXd ParameterLayout::pack(const ModelParams& p) const {
  Eigen::VectorXd u(total());
  int at = 0;
  auto put_identity = [&](double v) { u[at++] = v; };
  auto put_square = [&](double v, const std::string& what) {
    if (v < 0.0)
      throw ConstraintViolation(what + " must be nonnegative, got " + std::to_string(v));
    u[at++] = std::sqrt(v);
  };

  if (p.beta.size() != spec_.n_fixed() || p.cholB.rows() != spec_.q() ||
      static_cast<int>(p.markers.size()) != spec_.n_markers() ||
      static_cast<int>(p.causes.size()) != spec_.n_causes())
    throw DimensionMismatch("parameter shapes do not match the model spec");

  for (int i = 0; i < p.beta.size(); ++i) put_identity(p.beta[i]);
  for (int i = 0; i < spec_.q(); ++i)
    for (int j = 0; j <= i; ++j) put_identity(p.cholB(i, j));

  for (int k = 0; k < spec_.n_markers(); ++k) {
    const auto& m = spec_.markers[k];
    const auto& mp = p.markers[k];
    if (mp.eta.size() != marker_eta_size(m))
      throw DimensionMismatch("marker '" + m.name + "' eta size mismatch");
    switch (m.type) {
      case MarkerType::Gaussian:
        put_identity(mp.eta[0]);
        put_identity(mp.eta[1]);
        break;
      case MarkerType::Ordinal:
        put_identity(mp.eta[0]);
        for (int i = 1; i < mp.eta.size(); ++i) {
          const double inc = mp.eta[i] - mp.eta[i - 1];
          if (inc < 0.0)
            throw ConstraintViolation("marker '" + m.name + "' thresholds must be non-decreasing");
          u[at++] = std::sqrt(inc);
        }
        break;
      case MarkerType::Curvilinear:
        put_identity(mp.eta[0]);
        for (int i = 1; i < mp.eta.size(); ++i)
          put_square(mp.eta[i], "link basis weight");
        break;
    }
    if (!(mp.sigma > 0.0))
      throw ConstraintViolation("marker '" + m.name + "' sigma must be positive");
    put_square(mp.sigma, "sigma");
  }

  for (int pc = 0; pc < spec_.n_causes(); ++pc) {
    const auto& c = spec_.causes[pc];
    const auto& cp = p.causes[pc];
    if (cp.baseline.size() != c.baseline_param_count() ||
        cp.beta.size() != static_cast<int>(c.covariates.size()))
      throw DimensionMismatch("cause '" + c.name + "' parameter size mismatch");
    for (int i = 0; i < cp.baseline.size(); ++i) {
      if (!(cp.baseline[i] > 0.0))
        throw ConstraintViolation("cause '" + c.name + "' baseline parameters must be positive");
      put_square(cp.baseline[i], "baseline");
    }
    for (int i = 0; i < cp.beta.size(); ++i) put_identity(cp.beta[i]);
    const int want_alpha =
        c.association == AssociationKind::RandomEffects ? spec_.q() : 1;
    if (cp.alpha.size() != want_alpha)
      throw DimensionMismatch("cause '" + c.name + "' association size mismatch");
    for (int i = 0; i < cp.alpha.size(); ++i) put_identity(cp.alpha[i]);
  }

  // pinned coordinates are normative, not informative: overwrite
  for (int i = 0; i < total(); ++i)
    if (coords_[i].pinned) u[i] = coords_[i].pinned_value;
  return u;
}

ModelParams ParameterLayout::unpack(const Eigen::VectorXd& u_in) const {
  if (u_in.size() != total())
    throw DimensionMismatch("unconstrained vector has wrong length");
  Eigen::VectorXd u = u_in;
  for (int i = 0; i < total(); ++i)
    if (coords_[i].pinned) u[i] = coords_[i].pinned_value;

  ModelParams p;
  int at = 0;
  p.beta = u.segment(0, spec_.n_fixed());
  at += spec_.n_fixed();
  p.cholB = Eigen::MatrixXd::Zero(spec_.q(), spec_.q());
  for (int i = 0; i < spec_.q(); ++i)
    for (int j = 0; j <= i; ++j) p.cholB(i, j) = u[at++];

  for (int k = 0; k < spec_.n_markers(); ++k) {
    const auto& m = spec_.markers[k];
    MarkerParams mp;
    mp.eta.resize(marker_eta_size(m));
    switch (m.type) {
      case MarkerType::Gaussian:
        mp.eta[0] = u[at++];
        mp.eta[1] = u[at++];
        break;
      case MarkerType::Ordinal:
        mp.eta[0] = u[at++];
        for (int i = 1; i < mp.eta.size(); ++i) {
          const double s = u[at++];
          mp.eta[i] = mp.eta[i - 1] + s * s;
        }
        break;
      case MarkerType::Curvilinear:
        mp.eta[0] = u[at++];
        for (int i = 1; i < mp.eta.size(); ++i) {
          const double s = u[at++];
          mp.eta[i] = s * s;
        }
        break;
    }
    const double ssig = u[at++];
    mp.sigma = ssig * ssig;
    p.markers.push_back(std::move(mp));
  }

  for (int pc = 0; pc < spec_.n_causes(); ++pc) {
    const auto& c = spec_.causes[pc];
    CauseParams cp;
    cp.baseline.resize(c.baseline_param_count());
    for (int i = 0; i < cp.baseline.size(); ++i) {
      const double s = u[at++];
      cp.baseline[i] = s * s;
    }
    cp.beta.resize(static_cast<int>(c.covariates.size()));
    for (int i = 0; i < cp.beta.size(); ++i) cp.beta[i] = u[at++];
    cp.alpha.resize(c.association == AssociationKind::RandomEffects ? spec_.q() : 1);
    for (int i = 0; i < cp.alpha.size(); ++i) cp.alpha[i] = u[at++];
    p.causes.push_back(std::move(cp));
  }
  return p;
}

Eigen::VectorXd ParameterLayout::full_to_free(const Eigen::VectorXd& u_full) const {
  Eigen::VectorXd out(n_free_);
  for (int i = 0; i < total(); ++i)
    if (free_index_[i] >= 0) out[free_index_[i]] = u_full[i];
  return out;
}

Eigen::VectorXd ParameterLayout::free_to_full(const Eigen::VectorXd& u_free) const {
  if (u_free.size() != n_free_)
    throw DimensionMismatch("free vector has wrong length");
  Eigen::VectorXd out(total());
  for (int i = 0; i < total(); ++i)
    out[i] = free_index_[i] >= 0 ? u_free[free_index_[i]] : coords_[i].pinned_value;
  return out;
}

Eigen::VectorXd ParameterLayout::natural_values(const Eigen::VectorXd& u_full) const {
  Eigen::VectorXd nat(total());
  double chain = 0.0;
  for (int i = 0; i < total(); ++i) {
    const double u = coords_[i].pinned ? coords_[i].pinned_value : u_full[i];
    switch (coords_[i].transform) {
      case CoordTransform::Identity:
        nat[i] = u;
        break;
      case CoordTransform::Square:
        nat[i] = u * u;
        break;
      case CoordTransform::ThresholdIncrement:
        // previous coordinate in the same block is the previous threshold
        chain = nat[i - 1];
        nat[i] = chain + u * u;
        break;
    }
  }
  return nat;
}

Eigen::MatrixXd ParameterLayout::natural_jacobian(const Eigen::VectorXd& u_full) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(total(), total());
  for (int i = 0; i < total(); ++i) {
    const double u = coords_[i].pinned ? coords_[i].pinned_value : u_full[i];
    switch (coords_[i].transform) {
      case CoordTransform::Identity:
        J(i, i) = 1.0;
        break;
      case CoordTransform::Square:
        J(i, i) = 2.0 * u;
        break;
      case CoordTransform::ThresholdIncrement:
        J.row(i) = J.row(i - 1);
        J(i, i) = 2.0 * u;
        break;
    }
    if (coords_[i].pinned) J.row(i).setZero();
  }
  return J;
}

Eigen::MatrixXd ParameterLayout::full_covariance(const Eigen::MatrixXd& cov_free) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total(), total());
  for (int i = 0; i < total(); ++i) {
    if (free_index_[i] < 0) continue;
    for (int j = 0; j < total(); ++j) {
      if (free_index_[j] < 0) continue;
      out(i, j) = cov_free(free_index_[i], free_index_[j]);
    }
  }
  return out;
}

Eigen::VectorXd ParameterLayout::report_values(const Eigen::VectorXd& u_full) const {
  const Eigen::VectorXd nat = natural_values(u_full);
  Eigen::VectorXd out(total());
  for (int i = 0; i < total(); ++i)
    out[i] = coords_[i].report == ReportScale::Unconstrained
                 ? (coords_[i].pinned ? coords_[i].pinned_value : u_full[i])
                 : nat[i];
  return out;
}

Eigen::VectorXd ParameterLayout::report_ase(const Eigen::VectorXd& u_full,
                                            const Eigen::MatrixXd& cov_free) const {
  const Eigen::MatrixXd cov = full_covariance(cov_free);
  const Eigen::MatrixXd J = natural_jacobian(u_full);
  Eigen::VectorXd out(total());
  for (int i = 0; i < total(); ++i) {
    if (coords_[i].pinned) {
      out[i] = 0.0;
    } else if (coords_[i].report == ReportScale::Unconstrained) {
      out[i] = std::sqrt(std::max(0.0, cov(i, i)));
    } else {
      out[i] = std::sqrt(std::max(0.0, (J.row(i) * cov * J.row(i).transpose())(0)));
    }
  }
  return out;
}

Eigen::VectorXd ParameterLayout::natural_ase(const Eigen::VectorXd& u_full,
                                             const Eigen::MatrixXd& cov_free) const {
  const Eigen::MatrixXd cov = full_covariance(cov_free);
  const Eigen::MatrixXd J = natural_jacobian(u_full);
  Eigen::VectorXd out(total());
  for (int i = 0; i < total(); ++i)
    out[i] = std::sqrt(std::max(0.0, (J.row(i) * cov * J.row(i).transpose())(0)));
  return out;
}

}  // namespace jlp
