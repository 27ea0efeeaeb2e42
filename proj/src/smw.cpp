#include "sparseq/smw.hpp"

#include <cmath>
#include <map>

#include "json.hpp"

namespace sparseq {

namespace {

void validate_params(std::uint64_t m, double alpha) {
  if (m == 0) {
    fail(Errc::validation_error, "sparsity m must be at least 1");
  }
  if (!(alpha > 0.0) || alpha > 1.0) {
    fail(Errc::validation_error, "alpha must lie in (0, 1]");
  }
}

bool size_predicate(std::uint64_t s, double target) {
  const double sd = static_cast<double>(s);
  return sd / (std::log(sd) + 1.0) >= target;
}

}  // namespace

std::uint64_t smw_size(std::uint64_t m, double alpha) {
  validate_params(m, alpha);
  const double target = 4.0 * static_cast<double>(m) / (alpha * alpha);
  if (target > 1e16) {
    fail(Errc::validation_error, "required structure size is out of range (alpha too small)");
  }
  // s / (ln s + 1) is nondecreasing for s >= 1: double until the predicate
  // holds, then binary search for the smallest satisfying integer.
  std::uint64_t hi = 1;
  while (!size_predicate(hi, target)) {
    hi *= 2;
  }
  std::uint64_t lo = hi / 2;  // predicate false at lo (or lo == 0)
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (size_predicate(mid, target)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

SmwState smw_init(std::uint64_t m, double alpha) {
  SmwState state;
  state.size = smw_size(m, alpha);
  state.weights.assign(state.size, 1.0 / static_cast<double>(state.size));
  state.next_index = 1;
  state.eta = alpha / 2.0;
  state.alpha = alpha;
  state.max_sparsity = m;
  return state;
}

double smw_evaluate(const SmwState& state, const SparseQuery& q) {
  double value = 0.0;
  const double unassigned_weight =
      state.next_index <= state.size ? state.weights[state.next_index - 1] : 0.0;
  for (const auto& [id, weight] : q.support) {
    auto it = state.assignments.find(id);
    if (it != state.assignments.end()) {
      value += weight * state.weights[it->second - 1];
    } else {
      value += weight * unassigned_weight;
    }
  }
  state.ops += q.support.size();
  return value;
}

UpdateRecord smw_update(SmwState& state, const SparseQuery& q, double estimate) {
  if (sparsity(q) > state.max_sparsity) {
    fail(Errc::sparsity_exceeded, "query sparsity " + std::to_string(sparsity(q)) +
                                      " exceeds the m = " + std::to_string(state.max_sparsity) +
                                      " this structure was sized for");
  }
  // Adding elements does not change the evaluation (unassigned elements and
  // freshly assigned ones both read the common untouched weight), so the
  // branch value can be computed up front.
  const double current = smw_evaluate(state, q);

  UpdateRecord record;
  record.query = q;
  record.estimate = estimate;

  for (const auto& [id, weight] : q.support) {
    (void)weight;
    if (state.assignments.count(id)) continue;
    if (state.next_index > state.size) {
      fail(Errc::smw_failure, "no free variable for element '" + id + "' (size " +
                                  std::to_string(state.size) + " exhausted)");
    }
    state.assignments.emplace(id, state.next_index);
    record.newly_assigned.push_back(id);
    ++state.next_index;
  }

  record.direction = estimate < current ? UpdateDirection::lower : UpdateDirection::raise;
  const double signed_eta = record.direction == UpdateDirection::lower ? -state.eta : state.eta;
  for (const auto& [id, weight] : q.support) {
    const std::uint64_t idx = state.assignments.at(id);
    state.weights[idx - 1] *= std::exp(signed_eta * weight);
  }

  double sum = 0.0;
  for (double w : state.weights) sum += w;
  for (double& w : state.weights) w /= sum;

  state.ops += q.support.size() * 2 + state.size;
  return record;
}

double smw_bound(std::uint64_t m, double alpha) {
  const std::uint64_t s = smw_size(m, alpha);
  return 4.0 * (std::log(static_cast<double>(s)) + 1.0) / (alpha * alpha);
}

std::string smw_snapshot_json(const SmwState& state) {
  nlohmann::ordered_json j;
  j["s"] = state.size;
  j["eta"] = state.eta;
  j["alpha"] = state.alpha;
  j["m"] = state.max_sparsity;
  j["ind"] = state.next_index;
  j["weights"] = state.weights;
  nlohmann::ordered_json h = nlohmann::ordered_json::object();
  // map iteration over a sorted copy keeps snapshots deterministic
  std::map<std::string, std::uint64_t> sorted(state.assignments.begin(), state.assignments.end());
  for (const auto& [id, idx] : sorted) h[id] = idx;
  j["h"] = std::move(h);
  return j.dump();
}

SmwState smw_from_snapshot_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, std::string("snapshot parse: ") + e.what());
  }
  SmwState state;
  try {
    state.size = j.at("s").get<std::uint64_t>();
    state.eta = j.at("eta").get<double>();
    state.alpha = j.at("alpha").get<double>();
    state.max_sparsity = j.at("m").get<std::uint64_t>();
    state.next_index = j.at("ind").get<std::uint64_t>();
    state.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& [id, idx] : j.at("h").items()) {
      state.assignments.emplace(id, idx.get<std::uint64_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, std::string("snapshot fields: ") + e.what());
  }
  if (state.weights.size() != state.size || state.next_index < 1 ||
      state.next_index > state.size + 1) {
    fail(Errc::format_error, "snapshot is internally inconsistent");
  }
  return state;
}

}  // namespace sparseq
