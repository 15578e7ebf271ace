#include "jlp/math/sobol.hpp"

#include <bit>

namespace jlp {

namespace {

// Primitive polynomials and initial direction numbers (Joe & Kuo style)
// for dimensions 2..16; dimension 1 uses the van der Corput sequence.
struct DimInit {
  int degree;
  std::uint32_t poly;  // coefficients a_1..a_{s-1} packed, excluding leading/trailing 1
  std::uint32_t m[6];
};

constexpr DimInit kDims[15] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
};

}  // namespace

SobolSequence::SobolSequence(int dim, std::uint64_t scramble_seed) : dim_(dim) {
  if (dim < 1 || dim > 16)
    throw DimensionMismatch("Sobol sequence supports 1..16 dimensions, got " +
                            std::to_string(dim));
  v_.assign(static_cast<std::size_t>(dim) * kBits, 0);
  state_.assign(dim, 0);
  shift_.assign(dim, 0);

  // dimension 1: v_j = 2^(32-j)
  for (int j = 0; j < kBits; ++j) v_[j] = 1u << (kBits - 1 - j);

  for (int d = 1; d < dim; ++d) {
    const DimInit& di = kDims[d - 1];
    const int s = di.degree;
    std::uint32_t* v = &v_[static_cast<std::size_t>(d) * kBits];
    for (int j = 0; j < s; ++j) v[j] = di.m[j] << (kBits - 1 - j);
    for (int j = s; j < kBits; ++j) {
      std::uint32_t x = v[j - s] ^ (v[j - s] >> s);
      for (int k = 1; k < s; ++k)
        if ((di.poly >> (s - 1 - k)) & 1u) x ^= v[j - k];
      v[j] = x;
    }
  }

  Rng rng(scramble_seed);
  for (int d = 0; d < dim_; ++d)
    shift_[d] = static_cast<std::uint32_t>(rng.next_u64() >> 32);
}

void SobolSequence::next(double* out) {
  if (index_ > 0) {
    // Gray-code update: flip the direction number of the lowest zero bit.
    const int c = std::countr_one(index_ - 1);
    for (int d = 0; d < dim_; ++d)
      state_[d] ^= v_[static_cast<std::size_t>(d) * kBits + c];
  }
  for (int d = 0; d < dim_; ++d) {
    const std::uint32_t y = state_[d] ^ shift_[d];
    out[d] = (static_cast<double>(y) + 0.5) * 0x1.0p-32;
  }
  ++index_;
}

}  // namespace jlp
