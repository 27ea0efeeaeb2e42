#include "sparseq/gf2.hpp"

#include <cstring>

namespace sparseq::gf2 {

namespace {

struct TailWords {
  std::uint64_t hi;
  std::uint64_t lo;
};

// Minimal-weight irreducible polynomial per degree, stored without the
// leading term. Entry d-1 is the tail of the degree-d modulus. Every entry
// is verified irreducible by the test suite.
constexpr TailWords kIrreducibleTails[128] = {
    {0x0000000000000000ull, 0x0000000000000001ull},  // x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^4 + x + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^5 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^6 + x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^7 + x + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^8 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^9 + x + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^10 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^11 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^12 + x^3 + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^13 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000021ull},  // x^14 + x^5 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^15 + x + 1
    {0x0000000000000000ull, 0x000000000000002bull},  // x^16 + x^5 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^17 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^18 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000027ull},  // x^19 + x^5 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^20 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^21 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^22 + x + 1
    {0x0000000000000000ull, 0x0000000000000021ull},  // x^23 + x^5 + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^24 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^25 + x^3 + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^26 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000027ull},  // x^27 + x^5 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^28 + x + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^29 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^30 + x + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^31 + x^3 + 1
    {0x0000000000000000ull, 0x000000000000008dull},  // x^32 + x^7 + x^3 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000401ull},  // x^33 + x^10 + 1
    {0x0000000000000000ull, 0x0000000000000081ull},  // x^34 + x^7 + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^35 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^36 + x^9 + 1
    {0x0000000000000000ull, 0x0000000000000053ull},  // x^37 + x^6 + x^4 + x + 1
    {0x0000000000000000ull, 0x0000000000000063ull},  // x^38 + x^6 + x^5 + x + 1
    {0x0000000000000000ull, 0x0000000000000011ull},  // x^39 + x^4 + 1
    {0x0000000000000000ull, 0x0000000000000039ull},  // x^40 + x^5 + x^4 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^41 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000081ull},  // x^42 + x^7 + 1
    {0x0000000000000000ull, 0x0000000000000059ull},  // x^43 + x^6 + x^4 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000021ull},  // x^44 + x^5 + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^45 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^46 + x + 1
    {0x0000000000000000ull, 0x0000000000000021ull},  // x^47 + x^5 + 1
    {0x0000000000000000ull, 0x000000000000002dull},  // x^48 + x^5 + x^3 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^49 + x^9 + 1
    {0x0000000000000000ull, 0x000000000000001dull},  // x^50 + x^4 + x^3 + x^2 + 1
    {0x0000000000000000ull, 0x000000000000004bull},  // x^51 + x^6 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^52 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000047ull},  // x^53 + x^6 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^54 + x^9 + 1
    {0x0000000000000000ull, 0x0000000000000081ull},  // x^55 + x^7 + 1
    {0x0000000000000000ull, 0x0000000000000095ull},  // x^56 + x^7 + x^4 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000011ull},  // x^57 + x^4 + 1
    {0x0000000000000000ull, 0x0000000000080001ull},  // x^58 + x^19 + 1
    {0x0000000000000000ull, 0x0000000000000095ull},  // x^59 + x^7 + x^4 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^60 + x + 1
    {0x0000000000000000ull, 0x0000000000000027ull},  // x^61 + x^5 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000020000001ull},  // x^62 + x^29 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^63 + x + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^64 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000040001ull},  // x^65 + x^18 + 1
    {0x0000000000000000ull, 0x0000000000000009ull},  // x^66 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000027ull},  // x^67 + x^5 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^68 + x^9 + 1
    {0x0000000000000000ull, 0x0000000000000065ull},  // x^69 + x^6 + x^5 + x^2 + 1
    {0x0000000000000000ull, 0x000000000000002bull},  // x^70 + x^5 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000041ull},  // x^71 + x^6 + 1
    {0x0000000000000000ull, 0x0000000000000609ull},  // x^72 + x^10 + x^9 + x^3 + 1
    {0x0000000000000000ull, 0x0000000002000001ull},  // x^73 + x^25 + 1
    {0x0000000000000000ull, 0x0000000800000001ull},  // x^74 + x^35 + 1
    {0x0000000000000000ull, 0x000000000000004bull},  // x^75 + x^6 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000200001ull},  // x^76 + x^21 + 1
    {0x0000000000000000ull, 0x0000000000000065ull},  // x^77 + x^6 + x^5 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000069ull},  // x^78 + x^6 + x^5 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^79 + x^9 + 1
    {0x0000000000000000ull, 0x0000000000000215ull},  // x^80 + x^9 + x^4 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000011ull},  // x^81 + x^4 + 1
    {0x0000000000000000ull, 0x000000000000010bull},  // x^82 + x^8 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000095ull},  // x^83 + x^7 + x^4 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000000021ull},  // x^84 + x^5 + 1
    {0x0000000000000000ull, 0x0000000000000107ull},  // x^85 + x^8 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000200001ull},  // x^86 + x^21 + 1
    {0x0000000000000000ull, 0x0000000000002001ull},  // x^87 + x^13 + 1
    {0x0000000000000000ull, 0x00000000000000c5ull},  // x^88 + x^7 + x^6 + x^2 + 1
    {0x0000000000000000ull, 0x0000004000000001ull},  // x^89 + x^38 + 1
    {0x0000000000000000ull, 0x0000000008000001ull},  // x^90 + x^27 + 1
    {0x0000000000000000ull, 0x0000000000000123ull},  // x^91 + x^8 + x^5 + x + 1
    {0x0000000000000000ull, 0x0000000000200001ull},  // x^92 + x^21 + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^93 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000200001ull},  // x^94 + x^21 + 1
    {0x0000000000000000ull, 0x0000000000000801ull},  // x^95 + x^11 + 1
    {0x0000000000000000ull, 0x0000000000000641ull},  // x^96 + x^10 + x^9 + x^6 + 1
    {0x0000000000000000ull, 0x0000000000000041ull},  // x^97 + x^6 + 1
    {0x0000000000000000ull, 0x0000000000000801ull},  // x^98 + x^11 + 1
    {0x0000000000000000ull, 0x000000000000004bull},  // x^99 + x^6 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000008001ull},  // x^100 + x^15 + 1
    {0x0000000000000000ull, 0x00000000000000c3ull},  // x^101 + x^7 + x^6 + x + 1
    {0x0000000000000000ull, 0x0000000020000001ull},  // x^102 + x^29 + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^103 + x^9 + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^104 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000000011ull},  // x^105 + x^4 + 1
    {0x0000000000000000ull, 0x0000000000008001ull},  // x^106 + x^15 + 1
    {0x0000000000000000ull, 0x0000000000000291ull},  // x^107 + x^9 + x^7 + x^4 + 1
    {0x0000000000000000ull, 0x0000000000020001ull},  // x^108 + x^17 + 1
    {0x0000000000000000ull, 0x0000000000000035ull},  // x^109 + x^5 + x^4 + x^2 + 1
    {0x0000000000000000ull, 0x0000000200000001ull},  // x^110 + x^33 + 1
    {0x0000000000000000ull, 0x0000000000000401ull},  // x^111 + x^10 + 1
    {0x0000000000000000ull, 0x0000000000000039ull},  // x^112 + x^5 + x^4 + x^3 + 1
    {0x0000000000000000ull, 0x0000000000000201ull},  // x^113 + x^9 + 1
    {0x0000000000000000ull, 0x000000000000002dull},  // x^114 + x^5 + x^3 + x^2 + 1
    {0x0000000000000000ull, 0x00000000000001a1ull},  // x^115 + x^8 + x^7 + x^5 + 1
    {0x0000000000000000ull, 0x0000000000000017ull},  // x^116 + x^4 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000027ull},  // x^117 + x^5 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000200000001ull},  // x^118 + x^33 + 1
    {0x0000000000000000ull, 0x0000000000000101ull},  // x^119 + x^8 + 1
    {0x0000000000000000ull, 0x000000000000001bull},  // x^120 + x^4 + x^3 + x + 1
    {0x0000000000000000ull, 0x0000000000040001ull},  // x^121 + x^18 + 1
    {0x0000000000000000ull, 0x0000000000000047ull},  // x^122 + x^6 + x^2 + x + 1
    {0x0000000000000000ull, 0x0000000000000005ull},  // x^123 + x^2 + 1
    {0x0000000000000000ull, 0x0000000000080001ull},  // x^124 + x^19 + 1
    {0x0000000000000000ull, 0x00000000000000e1ull},  // x^125 + x^7 + x^6 + x^5 + 1
    {0x0000000000000000ull, 0x0000000000200001ull},  // x^126 + x^21 + 1
    {0x0000000000000000ull, 0x0000000000000003ull},  // x^127 + x + 1
    {0x0000000000000000ull, 0x0000000000000087ull},  // x^128 + x^7 + x^2 + x + 1
};

// 256-bit scratch polynomial as four 64-bit words, little-endian.
using Words4 = std::uint64_t[4];

void xor_shifted(Words4 w, u128 value, unsigned shift) {
  unsigned word = shift / 64;
  unsigned bits = shift % 64;
  std::uint64_t v0 = lo64(value);
  std::uint64_t v1 = hi64(value);
  if (bits == 0) {
    w[word] ^= v0;
    if (word + 1 < 4) w[word + 1] ^= v1;
  } else {
    w[word] ^= v0 << bits;
    if (word + 1 < 4) w[word + 1] ^= (v0 >> (64 - bits)) ^ (v1 << bits);
    if (word + 2 < 4) w[word + 2] ^= v1 >> (64 - bits);
  }
}

bool test_bit(const Words4 w, unsigned bit) {
  return (w[bit / 64] >> (bit % 64)) & 1u;
}

}  // namespace

u128 clmul64(std::uint64_t a, std::uint64_t b) {
  u128 window[16];
  window[0] = 0;
  window[1] = b;
  for (int i = 2; i < 16; i += 2) {
    window[i] = window[i / 2] << 1;
    window[i + 1] = window[i] ^ b;
  }
  u128 result = 0;
  unsigned shift = 0;
  while (a != 0) {
    result ^= window[a & 0xF] << shift;
    a >>= 4;
    shift += 4;
  }
  return result;
}

u128 Field::builtin_modulus_tail(std::uint32_t degree) {
  if (degree < 1 || degree > 128) {
    fail(Errc::unsupported_field_size,
         "no irreducible modulus for degree " + std::to_string(degree) +
             " (supported range is 1..128)");
  }
  const TailWords& t = kIrreducibleTails[degree - 1];
  return (static_cast<u128>(t.hi) << 64) | t.lo;
}

Field::Field(std::uint32_t degree) : Field(degree, builtin_modulus_tail(degree)) {}

Field::Field(std::uint32_t degree, u128 modulus_tail) : degree_(degree), tail_(modulus_tail) {
  if (degree_ < 1 || degree_ > 128) {
    fail(Errc::unsupported_field_size, "field degree must be in 1..128");
  }
  mask_ = (degree_ == 128) ? ~static_cast<u128>(0) : ((static_cast<u128>(1) << degree_) - 1);
  if ((tail_ & ~mask_) != 0) {
    fail(Errc::validation_error, "modulus tail has bits at or above the field degree");
  }
  init();
}

void Field::init() {
  windowed_ = degree_ <= 64;
  if (!windowed_) return;
  fold_ = std::make_unique<std::array<std::array<u128, 256>, 8>>();
  // single-bit values: x^(degree + k) mod p for k = 0..63
  u128 single[64];
  u128 cur = tail_;  // x^degree mod p
  for (int k = 0; k < 64; ++k) {
    single[k] = cur;
    cur <<= 1;
    if ((cur >> degree_) & 1) {
      cur = (cur & mask_) ^ tail_;
    }
  }
  for (int j = 0; j < 8; ++j) {
    auto& table = (*fold_)[j];
    table[0] = 0;
    for (int b = 1; b < 256; ++b) {
      int low = __builtin_ctz(static_cast<unsigned>(b));
      table[b] = table[b & (b - 1)] ^ single[8 * j + low];
    }
  }
}

u128 Field::reduce_windowed(u128 product) const {
  u128 acc = product & mask_;
  u128 high = product >> degree_;
  int j = 0;
  while (high != 0) {
    acc ^= (*fold_)[j][static_cast<std::uint8_t>(high)];
    high >>= 8;
    ++j;
  }
  return acc;
}

u128 Field::mul_windowed(u128 a, u128 b) const {
  u128 window[16];
  window[0] = 0;
  window[1] = b;
  for (int i = 2; i < 16; i += 2) {
    window[i] = window[i / 2] << 1;
    window[i + 1] = window[i] ^ b;
  }
  u128 product = 0;
  unsigned shift = 0;
  std::uint64_t rest = lo64(a);  // a < 2^64 for windowed fields
  while (rest != 0) {
    product ^= window[rest & 0xF] << shift;
    rest >>= 4;
    shift += 4;
  }
  return reduce_windowed(product);
}

u128 Field::mul_generic(u128 a, u128 b) const {
  Words4 p = {0, 0, 0, 0};
  u128 t = clmul64(lo64(a), lo64(b));
  p[0] ^= lo64(t);
  p[1] ^= hi64(t);
  t = clmul64(lo64(a), hi64(b));
  p[1] ^= lo64(t);
  p[2] ^= hi64(t);
  t = clmul64(hi64(a), lo64(b));
  p[1] ^= lo64(t);
  p[2] ^= hi64(t);
  t = clmul64(hi64(a), hi64(b));
  p[2] ^= lo64(t);
  p[3] ^= hi64(t);
  for (int bit = 254; bit >= static_cast<int>(degree_); --bit) {
    if (test_bit(p, static_cast<unsigned>(bit))) {
      p[bit / 64] ^= 1ull << (bit % 64);
      xor_shifted(p, tail_, static_cast<unsigned>(bit) - degree_);
    }
  }
  return (static_cast<u128>(p[1]) << 64) | p[0];
}

u128 Field::mul(u128 a, u128 b) const {
  return windowed_ ? mul_windowed(a, b) : mul_generic(a, b);
}

u128 Field::eval_poly(std::span<const u128> coeffs, u128 point) const {
  if (coeffs.empty()) return 0;
  if (degree_ <= 30) return eval_poly_small(coeffs, point);
  if (!windowed_) return eval_poly_generic(coeffs, point);
  // Window table for the fixed multiplicand, reused across Horner steps.
  u128 window[16];
  window[0] = 0;
  window[1] = point;
  for (int i = 2; i < 16; i += 2) {
    window[i] = window[i / 2] << 1;
    window[i + 1] = window[i] ^ point;
  }
  u128 acc = coeffs[coeffs.size() - 1];
  for (std::size_t idx = coeffs.size() - 1; idx-- > 0;) {
    u128 product = 0;
    unsigned shift = 0;
    std::uint64_t rest = lo64(acc);
    while (rest != 0) {
      product ^= window[rest & 0xF] << shift;
      rest >>= 4;
      shift += 4;
    }
    acc = reduce_windowed(product) ^ coeffs[idx];
  }
  return acc;
}

// All-u64 variant for degrees up to 30: window entries stay below 2^34 and
// nibble-shifted products below 2^62, so nothing needs the wide type.
u128 Field::eval_poly_small(std::span<const u128> coeffs, u128 point) const {
  std::uint64_t window[16];
  const std::uint64_t z = lo64(point);
  window[0] = 0;
  window[1] = z;
  for (int i = 2; i < 16; i += 2) {
    window[i] = window[i / 2] << 1;
    window[i + 1] = window[i] ^ z;
  }
  const std::uint64_t mask = lo64(mask_);
  const auto& fold = *fold_;
  std::uint64_t acc = lo64(coeffs[coeffs.size() - 1]);
  for (std::size_t idx = coeffs.size() - 1; idx-- > 0;) {
    std::uint64_t product = 0;
    unsigned shift = 0;
    std::uint64_t rest = acc;
    while (rest != 0) {
      product ^= window[rest & 0xF] << shift;
      rest >>= 4;
      shift += 4;
    }
    std::uint64_t reduced = product & mask;
    std::uint64_t high = product >> degree_;
    int j = 0;
    while (high != 0) {
      reduced ^= lo64(fold[j][static_cast<std::uint8_t>(high)]);
      high >>= 8;
      ++j;
    }
    acc = reduced ^ lo64(coeffs[idx]);
  }
  return acc;
}

u128 Field::eval_poly_generic(std::span<const u128> coeffs, u128 point) const {
  u128 acc = coeffs[coeffs.size() - 1];
  for (std::size_t idx = coeffs.size() - 1; idx-- > 0;) {
    acc = mul_generic(acc, point) ^ coeffs[idx];
  }
  return acc;
}

}  // namespace sparseq::gf2
