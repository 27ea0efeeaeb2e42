#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sparseq/data_model.hpp"
#include "sparseq/errors.hpp"
#include "sparseq/privacy.hpp"
#include "sparseq/queries.hpp"
#include "sparseq/rng.hpp"
#include "sparseq/smw.hpp"

namespace sparseq {

enum class SessionMode { private_mode, noise_disabled };

// What the budget ledger is charged for. `all_queries` charges every
// answer at the k-fold composition rate (plain composition, always sound).
// `updates_only` charges only update rounds at the update-budget rate; the
// sparse-vector argument that justifies ignoring suppressed answers is
// external to this ledger.
enum class ChargePolicy { all_queries, updates_only };

struct SessionConfig {
  PrivacyParams privacy{1.0, 1e-6};
  double beta = 0.1;
  std::uint64_t max_queries = 0;   // k
  std::uint64_t max_sparsity = 0;  // m
  std::uint64_t database_size = 0;  // n; filled from the database on open
  SessionMode mode = SessionMode::private_mode;
  ChargePolicy charge_policy = ChargePolicy::all_queries;
  std::optional<double> forced_alpha;  // test hook: skip the solver
  std::optional<std::uint64_t> forced_update_limit;  // test hook: shrink the update budget
  std::optional<std::uint64_t> seed;   // seeded stream; nullopt = system entropy
};

// Solves alpha = 3000 sqrt(B(alpha)) ln(4/delta) ln(k/beta) / (eps n) on
// (0, 1] by bisection (B decreasing makes the gap monotone). Throws
// Infeasible when even alpha = 1 is not reachable.
double solve_alpha(const SessionConfig& config);
// Same equation with an explicit alpha -> B(alpha) map (test hook).
double solve_alpha(const SessionConfig& config,
                   const std::function<double(double)>& bound_of_alpha);

struct TranscriptEntry {
  SparseQuery query;
  double answer = 0.0;
  bool was_update = false;
};

// One interactive answering session over an immutable database. Strictly
// sequential: answers are produced in arrival order. Noisy-threshold loop
// per query: compare the (noisy) exact answer against the current sparse-MW
// estimate; on a gap of at least 3/4 alpha feed the update rule and return
// the noisy answer, otherwise return the estimate.
class Session {
 public:
  Session(const Database& db, SessionConfig config);

  double answer(const SparseQuery& q);

  double alpha() const { return alpha_; }
  double threshold() const { return threshold_; }
  double answer_noise_scale() const { return noise_scale_; }
  std::uint64_t update_limit() const { return update_limit_; }
  std::uint64_t updates() const { return updates_; }
  std::uint64_t answered() const { return transcript_.size(); }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const SmwState& state() const { return state_; }
  const SessionConfig& config() const { return config_; }
  const std::optional<BudgetAccount>& budget() const { return budget_; }
  // Element touches consumed by the most recent answer (work-ceiling tests).
  std::uint64_t last_answer_ops() const { return last_answer_ops_; }

 private:
  const Database* db_;
  SessionConfig config_;
  double alpha_ = 0.0;
  double threshold_ = 0.0;
  double noise_scale_ = 0.0;
  double charge_epsilon_ = 0.0;
  std::uint64_t update_limit_ = 0;
  std::uint64_t updates_ = 0;
  std::uint64_t last_answer_ops_ = 0;
  SmwState state_;
  Rng rng_;
  std::optional<BudgetAccount> budget_;
  std::vector<TranscriptEntry> transcript_;
};

inline Session open_session(const Database& db, SessionConfig config) {
  return Session(db, std::move(config));
}

}  // namespace sparseq
