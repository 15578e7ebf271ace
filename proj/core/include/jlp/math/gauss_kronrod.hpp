#pragma once

#include <array>
#include <cmath>

namespace jlp {

// 15-point Kronrod rule (with the embedded 7-point Gauss rule) on [-1,1].
// Nodes/weights are the classical QUADPACK values.
struct GaussKronrod15 {
  // positive half of the symmetric node set; index 7 is the origin
  static constexpr std::array<double, 8> nodes = {
      0.991455371120813, 0.949107912342759, 0.864864423359769,
      0.741531185599394, 0.586087235467691, 0.405845151377397,
      0.207784955007898, 0.0};
  static constexpr std::array<double, 8> weights = {
      0.022935322010529, 0.063092092629979, 0.104790010322250,
      0.140653259715525, 0.169004726639267, 0.190350578064785,
      0.204432940075298, 0.209482141084728};
  // embedded Gauss-7 weights for nodes 1,3,5,7 of the list above
  static constexpr std::array<double, 4> gauss_weights = {
      0.129484966168870, 0.279705391489277, 0.381830050505119,
      0.417959183673469};

  // Fills the 15 mapped abscissae and weights for the interval [a,b],
  // in a fixed deterministic order.
  static void map(double a, double b, double* x, double* w) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    int k = 0;
    for (int i = 0; i < 7; ++i) {
      x[k] = c - h * nodes[i];
      w[k++] = h * weights[i];
      x[k] = c + h * nodes[i];
      w[k++] = h * weights[i];
    }
    x[k] = c;
    w[k] = h * weights[7];
  }

  template <class F>
  static double integrate(F&& f, double a, double b) {
    double x[15], w[15];
    map(a, b, x, w);
    double s = 0.0;
    for (int i = 0; i < 15; ++i) s += w[i] * f(x[i]);
    return s;
  }

  // Kronrod value together with the |K15-G7| error estimate; used by the
  // adaptive refinement below (test oracles and event-time inversion).
  template <class F>
  static double integrate_with_error(F&& f, double a, double b, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double kron = 0.0, gauss = 0.0;
    for (int i = 0; i < 7; ++i) {
      const double fv = f(c - h * nodes[i]) + f(c + h * nodes[i]);
      kron += weights[i] * fv;
      if (i % 2 == 1) gauss += gauss_weights[i / 2] * fv;
    }
    const double f0 = f(c);
    kron += weights[7] * f0;
    gauss += gauss_weights[3] * f0;
    err = std::abs(h * (kron - gauss));
    return h * kron;
  }
};

// Adaptive bisection on top of the K15/G7 pair. Not used in the likelihood
// path (which is a fixed single panel); serves as a high-accuracy reference.
template <class F>
double adaptive_quadrature(F&& f, double a, double b, double rel_tol = 1e-12,
                           int max_depth = 40) {
  struct Rec {
    static double go(F& f, double a, double b, double whole, double err,
                     double tol, int depth) {
      if (err <= tol * std::abs(whole) + 1e-300 || depth <= 0) return whole;
      const double m = 0.5 * (a + b);
      double e1, e2;
      const double left = GaussKronrod15::integrate_with_error(f, a, m, e1);
      const double right = GaussKronrod15::integrate_with_error(f, m, b, e2);
      return go(f, a, m, left, e1, tol, depth - 1) +
             go(f, m, b, right, e2, tol, depth - 1);
    }
  };
  double err;
  const double whole = GaussKronrod15::integrate_with_error(f, a, b, err);
  return Rec::go(f, a, b, whole, err, rel_tol, max_depth);
}

}  // namespace jlp
