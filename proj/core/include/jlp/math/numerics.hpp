#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace jlp {

// Kahan compensated summation; result independent of magnitude spread
// well beyond plain accumulation.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// log(sum_i exp(x_i)) with max shift; -inf entries are tolerated.
inline double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x)
    if (v > m) m = v;
  if (!std::isfinite(m)) return m;  // all -inf (or a nan propagates below)
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

// log(mean_i exp(x_i))
inline double log_mean_exp(std::span<const double> x) {
  return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

}  // namespace jlp
