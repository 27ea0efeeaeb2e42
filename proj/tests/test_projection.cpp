#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "sparseq/bench.hpp"
#include "sparseq/projection.hpp"

using namespace sparseq;
using namespace sparseq::projection;

namespace {

DimensionPlan stub_plan(std::uint64_t rows, std::uint32_t degree, double sigma = 1.0) {
  DimensionPlan plan;
  plan.rows = rows;
  plan.degree = degree;
  plan.sigma = sigma;
  return plan;
}

}  // namespace

TEST_CASE("plan parameters follow their defining formulas") {
  const DimensionPlan plan = choose_dimensions(100, 8, 100, {1.0, std::exp(-8.0)}, 0.1, {});
  CHECK(plan.tau == doctest::Approx(2.5e-4).epsilon(1e-12));
  CHECK(plan.sigma == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

  // independently recomputed dimension for n=100, m=8, rho=n^2, default c
  const double rho = 100.0 * 100.0;
  const double varsigma = 2.0 * std::sqrt(8.0) / (8.0 + rho);
  const double expected_rows =
      std::ceil(16384.0 * std::log(4000.0) / (varsigma * varsigma));
  CHECK(plan.varsigma == doctest::Approx(varsigma).epsilon(1e-12));
  CHECK(static_cast<double>(plan.rows) == expected_rows);

  // r: smallest even integer covering both requirements
  const double need = std::max(2.0 * std::log(1.0 / plan.tau),
                               2.0 * (std::log(100.0) + std::log(static_cast<double>(plan.rows)) -
                                      std::log(2.0 * 0.1)));
  CHECK(plan.degree % 2 == 0);
  CHECK(static_cast<double>(plan.degree) >= need);
  CHECK(static_cast<double>(plan.degree) - 2.0 < need);
}

TEST_CASE("plan validation") {
  CHECK_THROWS_AS(choose_dimensions(0, 8, 100, {1.0, 1e-6}, 0.1, {}), Error);
  CHECK_THROWS_AS(choose_dimensions(100, 8, 100, {1.0, 1e-6}, 1.5, {}), Error);
  try {
    choose_dimensions(100, 8, 100, {1.0, 0.0}, 0.1, {});
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::composition_undefined);
  }
}

TEST_CASE("hash field size is the smallest power of two covering T x |X|") {
  Rng rng = Rng::seeded(1);
  const HashFamilySpec spec = sample_hash(stub_plan(1024, 10), 8, rng);
  CHECK(spec.field_bits == 18);  // 2^18 = 262144 >= 1024 * 256
  CHECK(spec.coefficients.size() == 11);
  CHECK(field_bits_for(1, 4) == 4);
  CHECK(field_bits_for(2, 4) == 5);
  CHECK(field_bits_for(1025, 8) == 19);

  // determinism under a fixed seed
  Rng r1 = Rng::seeded(42);
  Rng r2 = Rng::seeded(42);
  const HashFamilySpec a = sample_hash(stub_plan(512, 6), 8, r1);
  const HashFamilySpec b = sample_hash(stub_plan(512, 6), 8, r2);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.modulus_tail == b.modulus_tail);

  // field sizes beyond the modulus table are rejected
  HashFamilySpec oversized;
  oversized.rows = 8;
  oversized.universe_bits = 8;
  oversized.field_bits = 129;
  oversized.degree = 2;
  oversized.coefficients = {1, 1, 1};
  try {
    ProjectionMatrix matrix(oversized);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unsupported_field_size);
  }
}

TEST_CASE("last output bits are balanced") {
  Rng rng = Rng::seeded(2);
  const HashFamilySpec spec = sample_hash(stub_plan(1024, 10), 8, rng);
  const ProjectionMatrix matrix(spec);
  std::uint64_t ones = 0;
  std::uint64_t total = 0;
  std::vector<std::uint8_t> bits;
  for (std::uint64_t col = 1; col <= 128; ++col) {
    matrix.column_bits(col, bits);
    for (std::uint8_t b : bits) ones += b;
    total += bits.size();
  }
  REQUIRE(total >= 100'000);
  const double fraction = static_cast<double>(ones) / static_cast<double>(total);
  CHECK(fraction > 0.49);
  CHECK(fraction < 0.51);
}

TEST_CASE("matrix entries are deterministic signs of fixed magnitude") {
  Rng rng = Rng::seeded(3);
  const HashFamilySpec spec = sample_hash(stub_plan(64, 6), 6, rng);
  const ProjectionMatrix matrix(spec);
  const double expected = 1.0 / std::sqrt(64.0);
  for (std::uint64_t row = 1; row <= 64; row += 7) {
    for (std::uint64_t col = 1; col <= 64; col += 5) {
      const double e1 = matrix.entry(row, col);
      const double e2 = matrix.entry(row, col);
      CHECK(e1 == e2);
      CHECK(std::fabs(e1) == expected);
    }
  }
  CHECK(matrix_entry(spec, 1, 1) == matrix.entry(1, 1));
  CHECK_THROWS_AS(matrix.entry(0, 1), Error);
  CHECK_THROWS_AS(matrix.entry(1, 65), Error);
  CHECK_THROWS_AS(matrix.entry(65, 1), Error);
}

TEST_CASE("a constant polynomial gives a constant sign") {
  HashFamilySpec spec;
  spec.rows = 32;
  spec.universe_bits = 4;
  spec.field_bits = field_bits_for(32, 4);
  spec.degree = 0;
  spec.modulus_tail = gf2::Field::builtin_modulus_tail(spec.field_bits);
  spec.coefficients = {gf2::u128{1}};  // f == 1 everywhere
  const ProjectionMatrix matrix(spec);
  for (std::uint64_t row = 1; row <= 32; ++row) {
    for (std::uint64_t col = 1; col <= 16; ++col) {
      CHECK(matrix.sign_bit(row, col) == 1);
    }
  }
}

TEST_CASE("projecting a single-element database reproduces its column") {
  Rng rng = Rng::seeded(4);
  const Database db = make_database({{"0001", 1}});
  const ProjectionRelease release = sparse_project(db, stub_plan(256, 6), 4, rng, 0.0);
  const ProjectionMatrix matrix(release.hash);
  const std::uint64_t col = element_index("0001", 4);
  for (std::uint64_t i = 1; i <= 256; ++i) {
    CHECK(release.payload[i - 1] == matrix.entry(i, col));
  }
  CHECK(release.sigma == std::numeric_limits<double>::infinity());
}

TEST_CASE("per-coordinate neighbor sensitivity is exactly bounded by 1/sqrt(T)") {
  Rng outer = Rng::seeded(5);
  // power-of-four T keeps 1/sqrt(T) exactly representable, so the check
  // needs no tolerance at all
  const std::uint64_t rows = 1024;
  const double limit = 1.0 / std::sqrt(static_cast<double>(rows));
  for (int pair = 0; pair < 100; ++pair) {
    const std::uint64_t seed = outer.next_u64();
    Rng r1 = Rng::seeded(seed);
    Rng r2 = Rng::seeded(seed);
    Database db = bench::random_database(6, 40, 1.5, outer);

    // neighbor: add or remove one record
    Database neighbor = db;
    if (pair % 2 == 0) {
      neighbor.counts[element_id_for_index(1 + outer.next_below(64), 6)] += 1;
      neighbor.total += 1;
    } else {
      auto it = neighbor.counts.begin();
      std::advance(it, outer.next_below(neighbor.counts.size()));
      if (it->second == 1) {
        neighbor.counts.erase(it);
      } else {
        --it->second;
      }
      neighbor.total -= 1;
    }

    const ProjectionRelease a = sparse_project(db, stub_plan(rows, 6), 6, r1, 0.0);
    const ProjectionRelease b = sparse_project(neighbor, stub_plan(rows, 6), 6, r2, 0.0);
    for (std::uint64_t i = 0; i < rows; ++i) {
      CHECK(std::fabs(a.payload[i] - b.payload[i]) <= limit);
    }
  }
}

TEST_CASE("projection noise has variance 2/sigma^2") {
  // sigma = 1/8: Lap(8) coordinates, variance 128
  const Database db = make_database({{"000001", 1}});
  const std::uint64_t rows = 20'000;
  double sum = 0.0, sum_sq = 0.0;
  std::uint64_t count = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng = Rng::seeded(seed);
    const ProjectionRelease noisy = sparse_project(db, stub_plan(rows, 4, 1.0 / 8.0), 6, rng);
    Rng rng2 = Rng::seeded(seed);
    const ProjectionRelease clean = sparse_project(db, stub_plan(rows, 4, 1.0 / 8.0), 6, rng2, 0.0);
    for (std::uint64_t i = 0; i < rows; ++i) {
      const double noise = noisy.payload[i] - clean.payload[i];
      sum += noise;
      sum_sq += noise * noise;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double variance = sum_sq / static_cast<double>(count) - mean * mean;
  CHECK(std::fabs(variance - 128.0) / 128.0 < 0.03);
}

TEST_CASE("query projection is a signed column sum and is linear") {
  Rng rng = Rng::seeded(6);
  const HashFamilySpec spec = sample_hash(stub_plan(128, 6), 6, rng);
  const ProjectionMatrix matrix(spec);

  SparseQuery single;
  single.support = {{"000101", 1.0}};
  const std::vector<double> projected = project_query(spec, single);
  const std::uint64_t col = element_index("000101", 6);
  for (std::uint64_t i = 0; i < 128; ++i) {
    CHECK(projected[i] == matrix.entry(i + 1, col));
  }

  // linearity over disjoint supports
  SparseQuery q1, q2, merged;
  q1.support = {{"000001", 0.5}, {"000010", 0.75}};
  q2.support = {{"000100", 0.25}, {"001000", 1.0}};
  merged.support = q1.support;
  merged.support.insert(q2.support.begin(), q2.support.end());
  const auto p1 = project_query(spec, q1);
  const auto p2 = project_query(spec, q2);
  const auto pm = project_query(spec, merged);
  for (std::uint64_t i = 0; i < 128; ++i) {
    CHECK(pm[i] == doctest::Approx(p1[i] + p2[i]).epsilon(1e-12));
  }
}

TEST_CASE("projected coefficients respect the magnitude bound") {
  // scaled-down variant of the acceptance run: the 4 sqrt(m ln(kT/2beta) / T)
  // ceiling is extremely conservative, so zero violations are expected
  const std::uint64_t m = 16, k = 20;
  const double beta = 0.1;
  Rng rng = Rng::seeded(7);
  const DimensionPlan plan = stub_plan(1024, 26);
  const double bound =
      4.0 *
      std::sqrt(static_cast<double>(m) *
                std::log(static_cast<double>(k) * 1024.0 / (2.0 * beta)) / 1024.0);
  std::uint64_t violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const HashFamilySpec spec = sample_hash(plan, 8, rng);
    double max_coeff = 0.0;
    for (std::uint64_t j = 0; j < k; ++j) {
      const SparseQuery q = bench::random_support_query(8, m, true, rng);
      for (double v : project_query(spec, q)) {
        max_coeff = std::max(max_coeff, std::fabs(v));
      }
    }
    if (max_coeff > bound) ++violations;
  }
  CHECK(static_cast<double>(violations) / 20.0 <= beta / 4.0 + 0.15);
}

TEST_CASE("release evaluation equals the explicit dense computation") {
  Rng rng = Rng::seeded(8);
  const Database db = bench::random_database(8, 60, 2.0, rng);
  const ProjectionRelease release = sparse_project(db, stub_plan(128, 4), 8, rng, 0.0);
  const ProjectionMatrix matrix(release.hash);

  // dense matrices: 128 x 256
  std::vector<std::vector<double>> dense(128, std::vector<double>(256));
  for (std::uint64_t i = 1; i <= 128; ++i) {
    for (std::uint64_t j = 1; j <= 256; ++j) {
      dense[i - 1][j - 1] = matrix.entry(i, j);
    }
  }
  std::vector<double> db_vector(256, 0.0);
  for (const auto& [id, count] : db.counts) {
    db_vector[element_index(id, 8) - 1] = static_cast<double>(count);
  }

  ReleaseEvaluator evaluator(release);
  for (int trial = 0; trial < 25; ++trial) {
    const SparseQuery q = bench::random_support_query(8, 1 + rng.next_below(8), false, rng);
    std::vector<double> q_vector(256, 0.0);
    for (const auto& [id, weight] : q.support) {
      q_vector[element_index(id, 8) - 1] = weight;
    }
    double dot = 0.0;
    for (std::uint64_t i = 0; i < 128; ++i) {
      double aq = 0.0, ad = 0.0;
      for (std::uint64_t j = 0; j < 256; ++j) {
        aq += dense[i][j] * q_vector[j];
        ad += dense[i][j] * db_vector[j];
      }
      dot += aq * ad;
    }
    const double expected = dot / static_cast<double>(db.total);
    CHECK(evaluate_release(release, q) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(evaluator.evaluate(q) == doctest::Approx(expected).epsilon(1e-12));
    // purity: repeated evaluation is bit-identical
    CHECK(evaluate_release(release, q) == evaluate_release(release, q));
    CHECK(evaluator.evaluate(q) == evaluator.evaluate(q));
  }
}

TEST_CASE("serialization round-trips bit-exactly and rejects corruption") {
  Rng rng = Rng::seeded(9);
  const Database db = bench::random_database(6, 50, 2.0, rng);
  const ProjectionRelease release = sparse_project(db, stub_plan(200, 8, 0.5), 6, rng);

  const std::vector<std::uint8_t> bytes = serialize_release(release);
  const ProjectionRelease back = deserialize_release(bytes);
  CHECK(back.hash.rows == release.hash.rows);
  CHECK(back.hash.field_bits == release.hash.field_bits);
  CHECK(back.hash.degree == release.hash.degree);
  CHECK(back.hash.universe_bits == release.hash.universe_bits);
  CHECK(back.hash.modulus_tail == release.hash.modulus_tail);
  CHECK(back.hash.coefficients == release.hash.coefficients);
  CHECK(back.database_size == release.database_size);
  CHECK(back.sigma == release.sigma);
  CHECK(back.payload == release.payload);
  CHECK(serialize_release(back) == bytes);

  // answers are identical through a round trip
  for (int trial = 0; trial < 20; ++trial) {
    const SparseQuery q = bench::random_support_query(6, 1 + rng.next_below(6), false, rng);
    CHECK(evaluate_release(back, q) == evaluate_release(release, q));
  }

  // layout: little-endian fields at fixed offsets
  REQUIRE(bytes.size() > 32);
  CHECK(bytes[0] == 'S');
  CHECK(bytes[1] == 'P');
  CHECK(bytes[2] == 'R');
  CHECK(bytes[3] == 'J');
  CHECK((bytes[4] | (bytes[5] << 8)) == 1);                          // version
  CHECK((bytes[6] | (bytes[7] << 8)) == 6);                          // universe bits
  CHECK((static_cast<std::uint32_t>(bytes[8]) | (bytes[9] << 8)) == 200);  // rows
  CHECK((bytes[12] | (bytes[13] << 8)) == release.hash.field_bits);
  CHECK((bytes[14] | (bytes[15] << 8)) == release.hash.degree);

  // corruption in header, payload and trailer regions
  for (std::size_t position : {std::size_t{5}, std::size_t{9}, std::size_t{40},
                               bytes.size() / 2, bytes.size() - 2}) {
    std::vector<std::uint8_t> corrupted = bytes;
    corrupted[position] ^= 0x40;
    CHECK_THROWS_AS(deserialize_release(corrupted), Error);
  }
  // truncation
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 9);
  CHECK_THROWS_AS(deserialize_release(truncated), Error);
  // bad magic
  std::vector<std::uint8_t> wrong = bytes;
  wrong[0] = 'X';
  try {
    deserialize_release(wrong);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::format_error);
  }
}

namespace {

// Bitwise CRC32C reference, independent of the library's table-driven one.
std::uint32_t reference_crc32c(std::span<const std::uint8_t> bytes) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 1) ? (0x82F63B78u ^ (crc >> 1)) : (crc >> 1);
    }
  }
  return crc ^ 0xFFFFFFFFu;
}

}  // namespace

TEST_CASE("arbitrary byte garbage never parses as a release") {
  Rng rng = Rng::seeded(11);
  // pure noise buffers
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> junk(rng.next_below(300));
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng.next_u64());
    CHECK_THROWS_AS((void)deserialize_release(junk), Error);
  }
  // valid prefix, then cut at arbitrary boundaries
  const Database db = make_database({{"0001", 2}, {"0010", 1}});
  Rng build = Rng::seeded(12);
  const auto bytes = serialize_release(sparse_project(db, stub_plan(64, 4, 0.5), 4, build));
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t cut = rng.next_below(bytes.size());
    std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS((void)deserialize_release(prefix), Error);
  }

  // the trailer matches an independent CRC32C implementation
  const std::uint8_t check_input[] = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  CHECK(reference_crc32c(check_input) == 0xE3069283u);
  const std::uint32_t stored = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  CHECK(stored ==
        reference_crc32c(std::span<const std::uint8_t>(bytes.data(), bytes.size() - 4)));

  // a forged header promising a huge payload (with a fixed-up checksum) is
  // rejected by the length check before any allocation happens
  auto inflated = bytes;
  inflated[10] = 0xFF;  // rows field, upper bytes
  inflated[11] = 0x7F;
  const std::uint32_t forged =
      reference_crc32c(std::span<const std::uint8_t>(inflated.data(), inflated.size() - 4));
  inflated[inflated.size() - 4] = static_cast<std::uint8_t>(forged);
  inflated[inflated.size() - 3] = static_cast<std::uint8_t>(forged >> 8);
  inflated[inflated.size() - 2] = static_cast<std::uint8_t>(forged >> 16);
  inflated[inflated.size() - 1] = static_cast<std::uint8_t>(forged >> 24);
  try {
    (void)deserialize_release(inflated);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::format_error);
  }
}

TEST_CASE("error bound matches an independent plug-in and is monotone") {
  // epsilon 1, delta e^-1, k = 4, beta = 1 - 1e-12 is outside the valid
  // range, so use the documented arithmetic with admissible values
  const PrivacyParams p{1.0, std::exp(-1.0)};
  const double bound = theoretical_error_bound(10, 4, 5, p, 0.5, 100);
  const double noise =
      16.0 * std::sqrt(3.0) *
      std::sqrt(4.0 * std::log(4.0 * 5.0 / 0.5) * 1.0 * (std::log(2.0 * 5.0 / 0.5) + std::log(100.0)));
  CHECK(bound == doctest::Approx((std::sqrt(4.0) + noise) / 10.0).epsilon(1e-12));

  // increasing in m, decreasing in n
  CHECK(theoretical_error_bound(100, 16, 50, p, 0.1, 1024) >
        theoretical_error_bound(100, 8, 50, p, 0.1, 1024));
  CHECK(theoretical_error_bound(1000, 8, 50, p, 0.1, 1024) <
        theoretical_error_bound(100, 8, 50, p, 0.1, 1024));

  CHECK_THROWS_AS(theoretical_error_bound(100, 0, 50, p, 0.1, 1024), Error);
}

TEST_CASE("database indexing collisions are rejected when projecting") {
  // "01" and "0001" read as the same 4-bit index
  Database db;
  db.counts = {{"01", 1}, {"0001", 1}};
  db.total = 2;
  Rng rng = Rng::seeded(10);
  try {
    sparse_project(db, stub_plan(64, 4), 4, rng, 0.0);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation_error);
  }
}
