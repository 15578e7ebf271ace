#pragma once

#include <span>
#include <vector>

namespace jlp {

// M-spline basis of a given order (order = degree + 1; cubic M-splines have
// order 4) on [boundary_lo, boundary_hi] with the given strictly increasing
// interior knots. Basis functions are nonnegative and each integrates to 1;
// their running integrals form the I-spline basis, which is used both for
// closed-form cumulative baseline hazards and for monotone link functions.
class MSplineBasis {
 public:
  MSplineBasis(int order, double boundary_lo, double boundary_hi,
               std::span<const double> interior_knots);

  int size() const { return nbasis_; }
  int order() const { return order_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  // M_i(t), i = 0..size()-1; zero outside [lo, hi] (t clamped by caller
  // policy, see evaluate docs in the .cpp).
  void evaluate(double t, double* out) const;

  // I_i(t) = integral of M_i from lo to t; 0 at lo, 1 at hi.
  void integral(double t, double* out) const;

 private:
  int order_;
  int nbasis_;
  double lo_, hi_;
  std::vector<double> knots_;  // boundaries repeated (order+1) times

  void mspline_all(double t, int order, std::vector<double>& out) const;
  int find_interval(double t) const;
};

// Natural cubic spline basis column (truncated power construction with
// linearity constraints beyond the boundary knots). `knots` holds all knots
// including the two boundaries; the basis has knots.size()-1 columns
// (column 0 is the identity t), no intercept.
double natural_cubic_basis(double t, std::span<const double> knots, int column);

}  // namespace jlp
