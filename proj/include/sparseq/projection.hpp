#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparseq/data_model.hpp"
#include "sparseq/errors.hpp"
#include "sparseq/gf2.hpp"
#include "sparseq/privacy.hpp"
#include "sparseq/queries.hpp"
#include "sparseq/rng.hpp"

namespace sparseq::projection {

struct PlanOverrides {
  // Johnson-Lindenstrauss constant c in T = ceil(c * ln(1/tau) / varsigma^2).
  // The default preserves the worst-case guarantee; relaxed values are for
  // experiments at desk scale.
  double jl_constant = 4.0 * 64.0 * 64.0;
  // Bound rho on the squared database norm; defaults to n^2 (always valid).
  // rho = n is valid for databases whose elements are all distinct.
  std::optional<double> norm_bound;
};

struct DimensionPlan {
  double tau = 0.0;        // beta / (4k)
  double varsigma = 0.0;   // 2 sqrt(m) / (m + rho)
  double sigma = 0.0;      // epsilon / sqrt(8 ln(1/delta)); noise scale is 1/sigma
  std::uint64_t rows = 0;  // T
  std::uint32_t degree = 0;  // r, even
  double jl_constant = 0.0;
  double norm_bound = 0.0;  // rho
  // inputs, kept for provenance
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  PrivacyParams privacy;
  double beta = 0.0;
};

DimensionPlan choose_dimensions(std::uint64_t n, std::uint64_t m, std::uint64_t k,
                                const PrivacyParams& privacy, double beta,
                                const PlanOverrides& overrides = {});

// A random degree-r polynomial over GF(2^field_bits), where field_bits is
// the smallest s with 2^s >= rows * 2^universe_bits. The last output bit
// at input rows*... ah, at input 2^universe_bits*(row-1)+col defines the
// +-1/sqrt(rows) matrix entry at (row, col).
struct HashFamilySpec {
  std::uint32_t field_bits = 0;     // s_f
  std::uint32_t degree = 0;         // r
  std::uint32_t universe_bits = 0;  // L
  std::uint64_t rows = 0;           // T
  gf2::u128 modulus_tail = 0;
  std::vector<gf2::u128> coefficients;  // c_0 .. c_r, constant term first
};

std::uint32_t field_bits_for(std::uint64_t rows, std::uint32_t universe_bits);

HashFamilySpec sample_hash(const DimensionPlan& plan, std::uint32_t universe_bits, Rng& rng);

// Entry oracle for the implicit T x 2^L matrix. Builds the field reduction
// tables once; prefer one instance per spec for bulk work.
class ProjectionMatrix {
 public:
  explicit ProjectionMatrix(const HashFamilySpec& spec);

  // Last output bit of the hash at (row, col); rows and cols are 1-based.
  int sign_bit(std::uint64_t row, std::uint64_t col) const;
  // (2b - 1) / sqrt(T)
  double entry(std::uint64_t row, std::uint64_t col) const;
  // All rows of one column: out[i] = sign bit at (i+1, col).
  void column_bits(std::uint64_t col, std::vector<std::uint8_t>& out) const;

  const HashFamilySpec& spec() const { return spec_; }
  double scale() const { return scale_; }

 private:
  gf2::u128 input_for(std::uint64_t row, std::uint64_t col) const;

  HashFamilySpec spec_;
  gf2::Field field_;
  gf2::u128 input_mask_ = 0;
  double scale_ = 0.0;
};

// Convenience single-entry oracle (rebuilds tables per call).
double matrix_entry(const HashFamilySpec& spec, std::uint64_t row, std::uint64_t col);

struct BuildParams {
  PrivacyParams privacy;
  double beta = 0.0;
  std::uint64_t m = 0;
  std::uint64_t k = 0;
};

struct ProjectionRelease {
  std::vector<double> payload;  // u + nu, length rows
  HashFamilySpec hash;
  std::uint64_t database_size = 0;  // n
  double sigma = 0.0;
  // Build-time inputs; in-memory provenance only, not serialized.
  std::optional<BuildParams> params;
};

// Builds the noisy projected database: payload[i] = sum over db elements of
// count(x) * A[i, index(x)] + Lap(1/sigma). noise_scale_override replaces
// the Laplace scale (0 disables noise; test hook).
ProjectionRelease sparse_project(const Database& db, const DimensionPlan& plan,
                                 std::uint32_t universe_bits, Rng& rng,
                                 std::optional<double> noise_scale_override = std::nullopt);

// Q_hat[i] = sum over the query support of weight(x) * A[i, index(x)].
std::vector<double> project_query(const HashFamilySpec& spec, const SparseQuery& q);

// (1/n) <Q_hat, payload>
double evaluate_release(const ProjectionRelease& release, const SparseQuery& q);

// (1/n) (sqrt(m) + (16 sqrt(3)/eps) sqrt(m ln(4k/b) ln(1/d) (ln(2k/b) + ln T)))
double theoretical_error_bound(std::uint64_t n, std::uint64_t m, std::uint64_t k,
                               const PrivacyParams& privacy, double beta, std::uint64_t rows);

// Little-endian release file: magic "SPRJ", version u16, L u16, T u32,
// s_f u16, r u16, sigma f64, n u64, modulus tail and r+1 coefficients of
// ceil(s_f/8) bytes each, T f64 payload values, CRC32C trailer.
std::vector<std::uint8_t> serialize_release(const ProjectionRelease& release);
ProjectionRelease deserialize_release(std::span<const std::uint8_t> bytes);
void write_release_file(const ProjectionRelease& release, const std::string& path);
ProjectionRelease read_release_file(const std::string& path);

// Evaluates many queries against one release, caching one dot product per
// distinct support element. Answers match evaluate_release up to floating
// summation order.
class ReleaseEvaluator {
 public:
  explicit ReleaseEvaluator(const ProjectionRelease& release);
  double evaluate(const SparseQuery& q);

 private:
  const ProjectionRelease* release_;
  ProjectionMatrix matrix_;
  std::unordered_map<std::uint64_t, double> column_dots_;
  std::vector<std::uint8_t> scratch_;
};

}  // namespace sparseq::projection
