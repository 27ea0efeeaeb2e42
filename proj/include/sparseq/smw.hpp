#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparseq/errors.hpp"
#include "sparseq/queries.hpp"

namespace sparseq {

// Sparse multiplicative-weights structure: s weight variables, a hash
// table lazily assigning universe elements to variable indices, and the
// index of the first unassigned variable. Indices are 1-based; the image
// of `assignments` is exactly [1, next_index - 1].
struct SmwState {
  std::vector<double> weights;                               // size s, sums to 1
  std::unordered_map<std::string, std::uint64_t> assignments;  // element id -> index
  std::uint64_t next_index = 1;                              // ind, in [1, s+1]
  std::uint64_t size = 0;                                    // s
  double eta = 0.0;                                          // learning rate, alpha/2
  double alpha = 0.0;
  std::uint64_t max_sparsity = 0;                            // m used at init
  // Element-touch counter; lets tests assert the O(m + s) per-operation
  // work ceiling without wall-clock timing.
  mutable std::uint64_t ops = 0;
};

enum class UpdateDirection { raise, lower };

struct UpdateRecord {
  SparseQuery query;
  double estimate = 0.0;
  UpdateDirection direction = UpdateDirection::raise;
  std::vector<std::string> newly_assigned;
};

// Smallest integer s with s / (ln s + 1) >= 4m / alpha^2.
std::uint64_t smw_size(std::uint64_t m, double alpha);

SmwState smw_init(std::uint64_t m, double alpha);

// Assigned support elements read their variable's weight; unassigned ones
// read weights[next_index] (0 once next_index = s + 1).
double smw_evaluate(const SmwState& state, const SparseQuery& q);

// One update step: assign every unassigned support element the next free
// index, multiply the support weights by exp(+-eta * q(x)) (lower when the
// estimate is below the pre-update evaluation, raise otherwise, including
// ties), then renormalize all s weights. Throws SmwFailure if an
// assignment would need index s + 1.
UpdateRecord smw_update(SmwState& state, const SparseQuery& q, double estimate);

// Update-count bound 4 (ln s + 1) / alpha^2 with s as in smw_init.
double smw_bound(std::uint64_t m, double alpha);

// Debug/persistence snapshot.
std::string smw_snapshot_json(const SmwState& state);
SmwState smw_from_snapshot_json(const std::string& text);

}  // namespace sparseq
