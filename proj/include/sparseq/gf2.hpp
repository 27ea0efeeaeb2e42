#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>

#include "sparseq/errors.hpp"

namespace sparseq::gf2 {

using u128 = unsigned __int128;

inline std::uint64_t lo64(u128 v) { return static_cast<std::uint64_t>(v); }
inline std::uint64_t hi64(u128 v) { return static_cast<std::uint64_t>(v >> 64); }

// Carry-less product of two 64-bit polynomials.
u128 clmul64(std::uint64_t a, std::uint64_t b);

// Binary field GF(2^degree) for 1 <= degree <= 128. Elements are bit
// patterns (bit i = coefficient of x^i) stored in the low `degree` bits of
// a u128. The modulus is x^degree + tail, with tail held explicitly.
//
// Degrees up to 64 use a windowed multiply with byte-folding reduction
// tables; larger degrees fall back to a slower generic path.
class Field {
 public:
  // Modulus taken from the built-in minimal-weight irreducible table.
  explicit Field(std::uint32_t degree);
  // Explicit modulus tail (used when loading serialized hash specs).
  Field(std::uint32_t degree, u128 modulus_tail);

  std::uint32_t degree() const { return degree_; }
  u128 modulus_tail() const { return tail_; }
  u128 element_mask() const { return mask_; }

  // Tail of the built-in irreducible polynomial of the given degree.
  static u128 builtin_modulus_tail(std::uint32_t degree);

  u128 add(u128 a, u128 b) const { return a ^ b; }
  u128 mul(u128 a, u128 b) const;

  // Horner evaluation of sum_t coeffs[t] * x^t at `point`.
  u128 eval_poly(std::span<const u128> coeffs, u128 point) const;

 private:
  void init();
  u128 reduce_windowed(u128 product) const;
  u128 mul_windowed(u128 a, u128 b) const;
  u128 mul_generic(u128 a, u128 b) const;
  u128 eval_poly_small(std::span<const u128> coeffs, u128 point) const;
  u128 eval_poly_generic(std::span<const u128> coeffs, u128 point) const;

  std::uint32_t degree_ = 0;
  u128 tail_ = 0;
  u128 mask_ = 0;
  bool windowed_ = false;
  // fold_[j][b] = b(x) * x^(degree + 8j) mod p, for reducing up to 64
  // overflow bits one byte at a time.
  std::unique_ptr<std::array<std::array<u128, 256>, 8>> fold_;
};

}  // namespace sparseq::gf2
