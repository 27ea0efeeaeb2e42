#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparseq/data_model.hpp"
#include "sparseq/interactive.hpp"
#include "sparseq/privacy.hpp"
#include "sparseq/projection.hpp"
#include "sparseq/report.hpp"
#include "sparseq/rng.hpp"
#include "sparseq/smw.hpp"

namespace sparseq::bench {

// One configuration drives one scenario; fields that a scenario does not
// use are ignored. Validation of the fields a scenario does need happens
// up front.
struct ExperimentConfig {
  std::string scenario;  // smw_adversary | interactive_e2e | projection_e2e |
                         // jl_distortion | conjunction_check
  std::vector<std::uint64_t> seeds;

  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  double alpha = 0.0;
  PrivacyParams privacy{1.0, 1e-6};
  double beta = 0.1;
  std::uint32_t universe_bits = 10;

  double jl_constant = 4.0 * 64.0 * 64.0;
  std::optional<double> norm_bound;

  std::uint64_t candidates = 200;   // adversary supports examined per round
  std::uint64_t max_updates = 0;    // adversary cap; 0 = run to exhaustion
  double skew = 3.0;                // database skew exponent (1 = uniform)

  std::uint64_t pairs = 10000;      // jl_distortion vector pairs
  std::uint64_t matrices = 100;     // jl_distortion fresh projections
  std::uint64_t vector_support = 8; // jl_distortion sparse-vector support
  std::uint64_t rows_override = 0;  // jl_distortion T
  double tau = 0.01;                // jl_distortion tau

  std::uint64_t trials = 100;       // conjunction databases / magnitude trials
  std::uint32_t dimension = 16;     // conjunction d
  std::uint64_t fixed_literals = 12;  // conjunction |S|

  bool force = false;  // override the resource guard rails

  std::string out_dir;  // optional; empty = do not emit files
};

// Resource guard: plans with T > 10^7 or structures with s > 10^7 abort
// with ResourceEstimateExceeded unless force is set.
constexpr std::uint64_t kResourceGuard = 10'000'000;

Report run_smw_adversary(const ExperimentConfig& config);
Report run_interactive_e2e(const ExperimentConfig& config);
Report run_projection_e2e(const ExperimentConfig& config);
Report run_jl_distortion(const ExperimentConfig& config);
Report run_conjunction_check(const ExperimentConfig& config);
Report run_scenario(const ExperimentConfig& config);

// --- pieces shared with the acceptance suite ---

struct AdversaryOptions {
  std::uint32_t universe_bits = 10;
  std::uint64_t n = 500;
  std::uint64_t m = 32;
  double alpha = 0.25;
  std::uint64_t candidates = 200;
  std::uint64_t max_updates = 0;  // 0 = run until no distinguishing query found
  double skew = 3.0;
  bool record_weights = false;    // keep w_0..w_T for potential checks
  bool force = false;
};

struct AdversaryResult {
  Database db;
  SmwState state;
  double bound = 0.0;  // B(alpha)
  std::uint64_t updates = 0;
  std::uint64_t failures = 0;  // structure-exhaustion events (expected 0)
  double final_max_gap = 0.0;
  std::vector<std::vector<double>> weight_trace;  // present when recorded
};

// Greedy distinguisher: per round examines `candidates` random m-element
// supports (plus every singleton on small universes), feeds the best one
// with its exact value as the estimate while its gap is at least alpha.
AdversaryResult run_greedy_adversary(const AdversaryOptions& options, Rng& rng);

// sum over assigned elements x of w_hat(x) * ln(w_hat(x) / weights[h(x)-1])
// where w_hat is the normalized database; elements without database mass
// contribute 0.
double smw_potential(const NormalizedDatabase& normalized, const SmwState& final_state,
                     std::span<const double> weights);

// n records drawn from a power-law-skewed distribution over the universe
// (skew 1 = uniform); ids are fixed-width bit strings.
Database random_database(std::uint32_t universe_bits, std::uint64_t n, double skew, Rng& rng);
// n distinct elements, count 1 each.
Database random_distinct_database(std::uint32_t universe_bits, std::uint64_t n, Rng& rng);
// m distinct support elements; unit weights, or uniform (0,1] weights.
SparseQuery random_support_query(std::uint32_t universe_bits, std::uint64_t m, bool unit_weights,
                                 Rng& rng);

}  // namespace sparseq::bench
