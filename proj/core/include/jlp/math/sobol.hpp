#pragma once

#include <cstdint>
#include <vector>

#include "jlp/errors.hpp"
#include "jlp/math/rng.hpp"

namespace jlp {

// Gray-code Sobol sequence with a seeded digital (XOR) scramble.
// 32-bit resolution; supports up to 16 dimensions, enough for the random
// effect counts handled here.
class SobolSequence {
 public:
  SobolSequence(int dim, std::uint64_t scramble_seed);

  int dim() const { return dim_; }

  // Seeded digital shift; identical seed gives identical sequence.
  // next() returns the scrambled point mapped into (0,1)^dim.
  void next(double* out);

  void skip(std::int64_t n) {
    std::vector<double> tmp(dim_);
    for (std::int64_t i = 0; i < n; ++i) next(tmp.data());
  }

 private:
  static constexpr int kBits = 32;
  int dim_;
  std::uint64_t index_ = 0;  // count of points generated so far
  std::vector<std::uint32_t> state_;              // per-dimension current integer
  std::vector<std::uint32_t> shift_;              // per-dimension digital shift
  std::vector<std::uint32_t> v_;                  // direction numbers, dim*kBits
};

}  // namespace jlp
