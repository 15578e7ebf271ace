#include "jlp/math/splines.hpp"

#include <algorithm>
#include <cmath>

#include "jlp/errors.hpp"

namespace jlp {

MSplineBasis::MSplineBasis(int order, double boundary_lo, double boundary_hi,
                           std::span<const double> interior_knots)
    : order_(order), lo_(boundary_lo), hi_(boundary_hi) {
  if (order < 1) throw ConstraintViolation("spline order must be >= 1");
  if (!(boundary_lo < boundary_hi))
    throw ConstraintViolation("spline boundary knots must be increasing");
  double prev = boundary_lo;
  for (double k : interior_knots) {
    if (!(k > prev) || !(k < boundary_hi))
      throw ConstraintViolation("spline interior knots must be strictly increasing within the boundaries");
    prev = k;
  }
  // boundaries repeated order+1 times so that both the order-k basis and the
  // order-(k+1) basis needed by the integrals live on the same knot vector
  knots_.assign(order_ + 1, lo_);
  knots_.insert(knots_.end(), interior_knots.begin(), interior_knots.end());
  knots_.insert(knots_.end(), order_ + 1, hi_);
  nbasis_ = static_cast<int>(interior_knots.size()) + order_;
}

int MSplineBasis::find_interval(double t) const {
  // largest j with knots_[j] <= t < knots_[j+1], restricted to non-empty
  // intervals; t at or beyond hi maps to the last non-empty interval
  const int last = static_cast<int>(knots_.size()) - order_ - 2;  // last non-empty
  if (t >= hi_) return last;
  int j = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), t) -
                           knots_.begin()) - 1;
  return std::clamp(j, order_, last);
}

void MSplineBasis::mspline_all(double t, int order, std::vector<double>& out) const {
  // all order-`order` M-splines on knots_, by the standard recursion
  const int n = static_cast<int>(knots_.size()) - order;
  out.assign(n, 0.0);
  const int j = find_interval(t);
  // order 1
  std::vector<double> cur(knots_.size() - 1, 0.0);
  if (knots_[j + 1] > knots_[j]) cur[j] = 1.0 / (knots_[j + 1] - knots_[j]);
  for (int k = 2; k <= order; ++k) {
    std::vector<double> nxt(knots_.size() - k, 0.0);
    for (int i = std::max(0, j - k + 1); i <= std::min<int>(j, static_cast<int>(nxt.size()) - 1); ++i) {
      const double denom = knots_[i + k] - knots_[i];
      if (denom <= 0.0) continue;
      const double a = (t - knots_[i]) * cur[i];
      const double b = (i + 1 < static_cast<int>(cur.size())) ? (knots_[i + k] - t) * cur[i + 1] : 0.0;
      nxt[i] = k * (a + b) / ((k - 1) * denom);
    }
    cur.swap(nxt);
  }
  out = cur;
}

void MSplineBasis::evaluate(double t, double* out) const {
  t = std::clamp(t, lo_, hi_);
  std::vector<double> all;
  mspline_all(t, order_, all);
  // the first and last order-k functions on this knot vector have zero-width
  // support (extra boundary repeat) and are dropped
  for (int i = 0; i < nbasis_; ++i) out[i] = all[i + 1];
}

void MSplineBasis::integral(double t, double* out) const {
  if (t <= lo_) {
    std::fill(out, out + nbasis_, 0.0);
    return;
  }
  if (t >= hi_) {
    std::fill(out, out + nbasis_, 1.0);
    return;
  }
  std::vector<double> hi_order;
  mspline_all(t, order_ + 1, hi_order);
  const int j = find_interval(t);
  for (int g = 0; g < nbasis_; ++g) {
    const int i = g + 1;  // index on the full knot vector
    if (i > j) {
      out[g] = 0.0;
      continue;
    }
    if (i < j - order_ + 1) {
      out[g] = 1.0;
      continue;
    }
    double s = 0.0;
    for (int m = i; m <= j; ++m)
      s += (knots_[m + order_ + 1] - knots_[m]) * hi_order[m] / (order_ + 1);
    out[g] = s;
  }
}

double natural_cubic_basis(double t, std::span<const double> knots, int column) {
  const int K = static_cast<int>(knots.size());
  if (K < 3) throw ConstraintViolation("natural cubic spline needs >= 3 knots (including boundaries)");
  if (column < 0 || column >= K - 1)
    throw ConstraintViolation("natural cubic spline column out of range");
  if (column == 0) return t;
  auto cube_pos = [](double x) { return x > 0.0 ? x * x * x : 0.0; };
  auto d = [&](int k) {
    return (cube_pos(t - knots[k]) - cube_pos(t - knots[K - 1])) /
           (knots[K - 1] - knots[k]);
  };
  return d(column - 1) - d(K - 2);
}

}  // namespace jlp
