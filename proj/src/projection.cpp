#include "sparseq/projection.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace sparseq::projection {

namespace {

std::uint32_t ceil_log2(std::uint64_t v) {
  if (v <= 1) return 0;
  return static_cast<std::uint32_t>(std::bit_width(v - 1));
}

// --- CRC32C (Castagnoli), table-driven, reflected polynomial 0x82F63B78 ---

const std::array<std::uint32_t, 256>& crc32c_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int j = 0; j < 8; ++j) {
        c = (c & 1) ? (0x82F63B78u ^ (c >> 1)) : (c >> 1);
      }
      t[i] = c;
    }
    return t;
  }();
  return table;
}

std::uint32_t crc32c(std::span<const std::uint8_t> bytes) {
  const auto& table = crc32c_table();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) {
    crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

// --- little-endian encoding helpers ---

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_uint_bytes(std::vector<std::uint8_t>& out, gf2::u128 v, std::size_t nbytes) {
  for (std::size_t i = 0; i < nbytes; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(u_n(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u_n(4)); }
  std::uint64_t u64() { return static_cast<std::uint64_t>(u_n(8)); }
  double f64() { return std::bit_cast<double>(u64()); }

  gf2::u128 uint_bytes(std::size_t nbytes) {
    need(nbytes);
    gf2::u128 v = 0;
    for (std::size_t i = 0; i < nbytes; ++i) {
      v |= static_cast<gf2::u128>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += nbytes;
    return v;
  }

  void raw(std::uint8_t* dst, std::size_t nbytes) {
    need(nbytes);
    std::memcpy(dst, bytes_.data() + pos_, nbytes);
    pos_ += nbytes;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint64_t u_n(std::size_t nbytes) {
    need(nbytes);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < nbytes; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += nbytes;
    return v;
  }

  void need(std::size_t nbytes) {
    if (remaining() < nbytes) {
      fail(Errc::format_error, "release file truncated");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'S', 'P', 'R', 'J'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

DimensionPlan choose_dimensions(std::uint64_t n, std::uint64_t m, std::uint64_t k,
                                const PrivacyParams& privacy, double beta,
                                const PlanOverrides& overrides) {
  if (n == 0 || m == 0 || k == 0) {
    fail(Errc::validation_error, "n, m and k must all be positive");
  }
  if (!(beta > 0.0) || !(beta < 1.0)) {
    fail(Errc::validation_error, "beta must lie in (0, 1)");
  }
  validate_privacy(privacy);
  if (privacy.delta == 0.0) {
    fail(Errc::composition_undefined, "the projection noise scale requires delta > 0");
  }
  if (!(overrides.jl_constant > 0.0)) {
    fail(Errc::validation_error, "jl_constant must be positive");
  }

  DimensionPlan plan;
  plan.n = n;
  plan.m = m;
  plan.k = k;
  plan.privacy = privacy;
  plan.beta = beta;
  plan.jl_constant = overrides.jl_constant;
  plan.norm_bound =
      overrides.norm_bound.value_or(static_cast<double>(n) * static_cast<double>(n));
  if (!(plan.norm_bound > 0.0)) {
    fail(Errc::validation_error, "norm_bound must be positive");
  }

  plan.tau = beta / (4.0 * static_cast<double>(k));
  plan.sigma = privacy.epsilon / std::sqrt(8.0 * std::log(1.0 / privacy.delta));
  plan.varsigma =
      2.0 * std::sqrt(static_cast<double>(m)) / (static_cast<double>(m) + plan.norm_bound);

  const double ln_inv_tau = std::log(1.0 / plan.tau);
  const double rows_real =
      std::ceil(plan.jl_constant * ln_inv_tau / (plan.varsigma * plan.varsigma));
  if (!(rows_real >= 1.0) || rows_real > 9.0e15) {
    fail(Errc::resource_estimate_exceeded,
         "projection dimension T is out of the representable range");
  }
  plan.rows = static_cast<std::uint64_t>(rows_real);

  // ln(k T / 2 beta) computed additively so huge T values cannot overflow.
  const double ln_kt_2beta = std::log(static_cast<double>(k)) +
                             std::log(static_cast<double>(plan.rows)) - std::log(2.0 * beta);
  const double degree_real = std::max(2.0 * ln_inv_tau, 2.0 * ln_kt_2beta);
  std::uint32_t degree = static_cast<std::uint32_t>(std::ceil(degree_real));
  if (degree < 2) degree = 2;
  if (degree % 2 == 1) ++degree;
  plan.degree = degree;
  return plan;
}

std::uint32_t field_bits_for(std::uint64_t rows, std::uint32_t universe_bits) {
  return universe_bits + ceil_log2(rows);
}

HashFamilySpec sample_hash(const DimensionPlan& plan, std::uint32_t universe_bits, Rng& rng) {
  if (plan.rows == 0 || plan.degree < 2 || plan.degree % 2 != 0) {
    fail(Errc::validation_error, "plan must carry T >= 1 and an even degree r >= 2");
  }
  if (universe_bits == 0 || universe_bits > 64) {
    fail(Errc::validation_error, "universe_bits must be in 1..64");
  }
  HashFamilySpec spec;
  spec.rows = plan.rows;
  spec.degree = plan.degree;
  spec.universe_bits = universe_bits;
  spec.field_bits = field_bits_for(plan.rows, universe_bits);
  if (spec.field_bits > 128) {
    fail(Errc::unsupported_field_size,
         "field of 2^" + std::to_string(spec.field_bits) + " elements exceeds the 128-bit table");
  }
  spec.modulus_tail = gf2::Field::builtin_modulus_tail(spec.field_bits);

  const gf2::u128 mask = (spec.field_bits == 128)
                             ? ~static_cast<gf2::u128>(0)
                             : ((static_cast<gf2::u128>(1) << spec.field_bits) - 1);
  spec.coefficients.resize(spec.degree + 1);
  for (auto& c : spec.coefficients) {
    gf2::u128 v = rng.next_u64();
    if (spec.field_bits > 64) {
      v |= static_cast<gf2::u128>(rng.next_u64()) << 64;
    }
    c = v & mask;
  }
  return spec;
}

ProjectionMatrix::ProjectionMatrix(const HashFamilySpec& spec)
    : spec_(spec), field_(spec.field_bits, spec.modulus_tail) {
  if (spec_.coefficients.size() != static_cast<std::size_t>(spec_.degree) + 1) {
    fail(Errc::validation_error, "hash spec must carry degree + 1 coefficients");
  }
  if (spec_.rows == 0) {
    fail(Errc::validation_error, "hash spec must have at least one row");
  }
  input_mask_ = field_.element_mask();
  scale_ = 1.0 / std::sqrt(static_cast<double>(spec_.rows));
}

gf2::u128 ProjectionMatrix::input_for(std::uint64_t row, std::uint64_t col) const {
  if (row < 1 || row > spec_.rows) {
    fail(Errc::validation_error, "row out of range");
  }
  if (col < 1 ||
      (spec_.universe_bits < 64 && col > (std::uint64_t{1} << spec_.universe_bits))) {
    fail(Errc::index_overflow, "column out of range");
  }
  gf2::u128 z = (static_cast<gf2::u128>(row - 1) << spec_.universe_bits) + col;
  return z & input_mask_;
}

int ProjectionMatrix::sign_bit(std::uint64_t row, std::uint64_t col) const {
  const gf2::u128 z = input_for(row, col);
  return static_cast<int>(field_.eval_poly(spec_.coefficients, z) & 1);
}

double ProjectionMatrix::entry(std::uint64_t row, std::uint64_t col) const {
  return sign_bit(row, col) ? scale_ : -scale_;
}

void ProjectionMatrix::column_bits(std::uint64_t col, std::vector<std::uint8_t>& out) const {
  out.resize(spec_.rows);
  gf2::u128 z = input_for(1, col);
  const gf2::u128 step = static_cast<gf2::u128>(1) << spec_.universe_bits;
  const std::span<const gf2::u128> coeffs(spec_.coefficients);
  for (std::uint64_t i = 0; i < spec_.rows; ++i) {
    out[i] = static_cast<std::uint8_t>(field_.eval_poly(coeffs, z & input_mask_) & 1);
    z += step;
  }
}

double matrix_entry(const HashFamilySpec& spec, std::uint64_t row, std::uint64_t col) {
  return ProjectionMatrix(spec).entry(row, col);
}

ProjectionRelease sparse_project(const Database& db, const DimensionPlan& plan,
                                 std::uint32_t universe_bits, Rng& rng,
                                 std::optional<double> noise_scale_override) {
  if (db.empty()) {
    fail(Errc::empty_database, "cannot project an empty database");
  }
  if (db.total > (std::uint64_t{1} << 62)) {
    fail(Errc::validation_error, "database too large for exact integer accumulation");
  }
  ProjectionRelease release;
  release.hash = sample_hash(plan, universe_bits, rng);
  release.database_size = db.total;
  release.params = BuildParams{plan.privacy, plan.beta, plan.m, plan.k};

  const double noise_scale = noise_scale_override.value_or(1.0 / plan.sigma);
  if (noise_scale < 0.0) {
    fail(Errc::validation_error, "noise scale must be nonnegative");
  }
  release.sigma = noise_scale_override.has_value()
                      ? (noise_scale == 0.0 ? std::numeric_limits<double>::infinity()
                                            : 1.0 / noise_scale)
                      : plan.sigma;

  ProjectionMatrix matrix(release.hash);
  const std::uint64_t rows = release.hash.rows;

  // Index every element, rejecting collisions: the id -> index map must be
  // injective within one run.
  std::unordered_map<std::uint64_t, const std::string*> seen;
  std::vector<std::pair<std::uint64_t, std::int64_t>> indexed;
  indexed.reserve(db.counts.size());
  for (const auto& [id, count] : db.counts) {
    const std::uint64_t idx = element_index(id, universe_bits);
    auto [it, inserted] = seen.emplace(idx, &id);
    if (!inserted) {
      fail(Errc::validation_error,
           "ids '" + *it->second + "' and '" + id + "' share index " + std::to_string(idx));
    }
    indexed.emplace_back(idx, static_cast<std::int64_t>(count));
  }

  // Exact signed-count accumulation; the single scaling by 1/sqrt(T) keeps
  // the per-coordinate neighbor difference exactly one matrix entry.
  std::vector<std::int64_t> acc(rows, 0);
  std::vector<std::uint8_t> bits;
  for (const auto& [idx, count] : indexed) {
    matrix.column_bits(idx, bits);
    for (std::uint64_t i = 0; i < rows; ++i) {
      acc[i] += bits[i] ? count : -count;
    }
  }

  Rng noise_root = Rng::seeded(rng.next_u64());
  release.payload.resize(rows);
  const double scale = matrix.scale();
  for (std::uint64_t i = 0; i < rows; ++i) {
    double noise = 0.0;
    if (noise_scale > 0.0) {
      Rng row_rng = noise_root.fork(i);
      noise = laplace_sample(noise_scale, row_rng);
    }
    release.payload[i] = static_cast<double>(acc[i]) * scale + noise;
  }
  return release;
}

std::vector<double> project_query(const HashFamilySpec& spec, const SparseQuery& q) {
  ProjectionMatrix matrix(spec);
  std::vector<double> acc(spec.rows, 0.0);
  std::vector<std::uint8_t> bits;
  for (const auto& [id, weight] : q.support) {
    const std::uint64_t idx = element_index(id, spec.universe_bits);
    matrix.column_bits(idx, bits);
    for (std::uint64_t i = 0; i < spec.rows; ++i) {
      acc[i] += bits[i] ? weight : -weight;
    }
  }
  const double scale = matrix.scale();
  for (double& v : acc) v *= scale;
  return acc;
}

double evaluate_release(const ProjectionRelease& release, const SparseQuery& q) {
  const std::vector<double> projected = project_query(release.hash, q);
  double dot = 0.0;
  for (std::size_t i = 0; i < projected.size(); ++i) {
    dot += projected[i] * release.payload[i];
  }
  return dot / static_cast<double>(release.database_size);
}

double theoretical_error_bound(std::uint64_t n, std::uint64_t m, std::uint64_t k,
                               const PrivacyParams& privacy, double beta, std::uint64_t rows) {
  if (n == 0 || m == 0 || k == 0 || rows == 0) {
    fail(Errc::validation_error, "n, m, k and T must all be positive");
  }
  if (!(beta > 0.0) || !(beta < 1.0)) {
    fail(Errc::validation_error, "beta must lie in (0, 1)");
  }
  validate_privacy(privacy);
  if (privacy.delta == 0.0) {
    fail(Errc::composition_undefined, "the error bound requires delta > 0");
  }
  const double md = static_cast<double>(m);
  const double noise = (16.0 * std::sqrt(3.0) / privacy.epsilon) *
                       std::sqrt(md * std::log(4.0 * static_cast<double>(k) / beta) *
                                 std::log(1.0 / privacy.delta) *
                                 (std::log(2.0 * static_cast<double>(k) / beta) +
                                  std::log(static_cast<double>(rows))));
  return (std::sqrt(md) + noise) / static_cast<double>(n);
}

std::vector<std::uint8_t> serialize_release(const ProjectionRelease& release) {
  const HashFamilySpec& spec = release.hash;
  if (spec.coefficients.size() != static_cast<std::size_t>(spec.degree) + 1) {
    fail(Errc::validation_error, "hash spec must carry degree + 1 coefficients");
  }
  if (release.payload.size() != spec.rows) {
    fail(Errc::validation_error, "payload length must equal T");
  }
  if (spec.rows > 0xFFFFFFFFull || spec.field_bits > 0xFFFF || spec.degree > 0xFFFF ||
      spec.universe_bits > 0xFFFF) {
    fail(Errc::validation_error, "release dimensions exceed the file format ranges");
  }
  std::vector<std::uint8_t> out;
  const std::size_t field_bytes = (spec.field_bits + 7) / 8;
  out.reserve(32 + field_bytes * (spec.degree + 2) + 8 * spec.rows + 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u16(out, static_cast<std::uint16_t>(spec.universe_bits));
  put_u32(out, static_cast<std::uint32_t>(spec.rows));
  put_u16(out, static_cast<std::uint16_t>(spec.field_bits));
  put_u16(out, static_cast<std::uint16_t>(spec.degree));
  put_f64(out, release.sigma);
  put_u64(out, release.database_size);
  put_uint_bytes(out, spec.modulus_tail, field_bytes);
  for (gf2::u128 c : spec.coefficients) {
    put_uint_bytes(out, c, field_bytes);
  }
  for (double v : release.payload) {
    put_f64(out, v);
  }
  put_u32(out, crc32c(out));
  return out;
}

ProjectionRelease deserialize_release(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(Errc::format_error, "bad magic (not a release file)");
  }
  const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                   (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                   (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                   (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  if (crc32c(bytes.subspan(0, bytes.size() - 4)) != stored_crc) {
    fail(Errc::format_error, "checksum mismatch");
  }
  ByteReader reader(bytes.subspan(4, bytes.size() - 8));

  ProjectionRelease release;
  const std::uint16_t version = reader.u16();
  if (version != kVersion) {
    fail(Errc::format_error, "unsupported version " + std::to_string(version));
  }
  HashFamilySpec& spec = release.hash;
  spec.universe_bits = reader.u16();
  spec.rows = reader.u32();
  spec.field_bits = reader.u16();
  spec.degree = reader.u16();
  release.sigma = reader.f64();
  release.database_size = reader.u64();
  if (spec.field_bits < 1 || spec.field_bits > 128) {
    fail(Errc::unsupported_field_size, "field bits " + std::to_string(spec.field_bits));
  }
  if (spec.universe_bits < 1 || spec.universe_bits > 64 || spec.rows == 0) {
    fail(Errc::format_error, "header dimensions out of range");
  }
  const std::size_t field_bytes = (spec.field_bits + 7) / 8;
  // Size check before any allocation: a corrupt header must not drive a
  // huge payload resize.
  const std::uint64_t expected_bytes =
      static_cast<std::uint64_t>(field_bytes) * (static_cast<std::uint64_t>(spec.degree) + 2) +
      8ull * spec.rows;
  if (reader.remaining() != expected_bytes) {
    fail(Errc::format_error, "payload length does not match the header");
  }
  spec.modulus_tail = reader.uint_bytes(field_bytes);
  spec.coefficients.resize(static_cast<std::size_t>(spec.degree) + 1);
  for (auto& c : spec.coefficients) {
    c = reader.uint_bytes(field_bytes);
  }
  release.payload.resize(spec.rows);
  for (auto& v : release.payload) {
    std::uint8_t raw[8];
    reader.raw(raw, 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return release;
}

void write_release_file(const ProjectionRelease& release, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_release(release);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(Errc::io_error, "cannot open '" + path + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    fail(Errc::io_error, "short write to '" + path + "'");
  }
}

ProjectionRelease read_release_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(Errc::io_error, "cannot open release file '" + path + "'");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_release(bytes);
}

ReleaseEvaluator::ReleaseEvaluator(const ProjectionRelease& release)
    : release_(&release), matrix_(release.hash) {}

double ReleaseEvaluator::evaluate(const SparseQuery& q) {
  // (1/n) <Q_hat, payload> = (1/(n sqrt(T))) sum_x q(x) * d(x) with
  // d(x) = sum_i sign(i, x) * payload[i], cached per column.
  double sum = 0.0;
  for (const auto& [id, weight] : q.support) {
    const std::uint64_t idx = element_index(id, release_->hash.universe_bits);
    auto it = column_dots_.find(idx);
    if (it == column_dots_.end()) {
      matrix_.column_bits(idx, scratch_);
      double dot = 0.0;
      for (std::uint64_t i = 0; i < release_->hash.rows; ++i) {
        dot += scratch_[i] ? release_->payload[i] : -release_->payload[i];
      }
      it = column_dots_.emplace(idx, dot).first;
    }
    sum += weight * it->second;
  }
  return sum * matrix_.scale() / static_cast<double>(release_->database_size);
}

}  // namespace sparseq::projection
