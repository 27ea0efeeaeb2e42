#include "sparseq/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace sparseq::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void require(bool condition, const std::string& message) {
  if (!condition) fail(Errc::validation_error, message);
}

std::uint64_t universe_size(std::uint32_t bits) {
  require(bits >= 1 && bits <= 24, "universe_bits must be in 1..24 for in-memory scans");
  return std::uint64_t{1} << bits;
}

// Partial Fisher-Yates over a persistent pool: the first m slots become a
// uniform m-subset.
void sample_subset(std::vector<std::uint64_t>& pool, std::uint64_t m, Rng& rng) {
  for (std::uint64_t j = 0; j < m; ++j) {
    const std::uint64_t swap_at = j + rng.next_below(pool.size() - j);
    std::swap(pool[j], pool[swap_at]);
  }
}

struct UniverseView {
  std::vector<std::string> ids;       // index-1 -> id
  std::vector<double> mass;           // count / n per index-1 (0 when absent)
};

UniverseView build_view(const Database& db, std::uint32_t bits) {
  const std::uint64_t universe = universe_size(bits);
  UniverseView view;
  view.ids.reserve(universe);
  for (std::uint64_t idx = 1; idx <= universe; ++idx) {
    view.ids.push_back(element_id_for_index(idx, bits));
  }
  view.mass.assign(universe, 0.0);
  for (const auto& [id, count] : db.counts) {
    view.mass[element_index(id, bits) - 1] =
        static_cast<double>(count) / static_cast<double>(db.total);
  }
  return view;
}

// Candidate-selection view of the evaluation rule; the chosen query is
// always re-evaluated through the real code path afterwards.
double state_value(const SmwState& state, const UniverseView& view,
                   std::span<const std::uint64_t> support) {
  const double unassigned =
      state.next_index <= state.size ? state.weights[state.next_index - 1] : 0.0;
  double value = 0.0;
  for (std::uint64_t idx : support) {
    auto it = state.assignments.find(view.ids[idx - 1]);
    value += it != state.assignments.end() ? state.weights[it->second - 1] : unassigned;
  }
  return value;
}

SparseQuery query_from_indices(const UniverseView& view, std::span<const std::uint64_t> support) {
  SparseQuery q;
  for (std::uint64_t idx : support) {
    q.support[view.ids[idx - 1]] = 1.0;
  }
  return q;
}

struct BestCandidate {
  double gap = -1.0;
  std::vector<std::uint64_t> support;
};

BestCandidate best_distinguisher(const SmwState& state, const UniverseView& view,
                                 std::uint64_t m, std::uint64_t candidates, bool singletons,
                                 std::vector<std::uint64_t>& pool, Rng& rng) {
  BestCandidate best;
  auto consider = [&](std::span<const std::uint64_t> support) {
    double exact = 0.0;
    for (std::uint64_t idx : support) exact += view.mass[idx - 1];
    const double gap = std::fabs(exact - state_value(state, view, support));
    if (gap > best.gap) {
      best.gap = gap;
      best.support.assign(support.begin(), support.end());
    }
  };

  for (std::uint64_t c = 0; c < candidates; ++c) {
    sample_subset(pool, m, rng);
    consider({pool.data(), m});
  }
  if (singletons) {
    std::uint64_t single[1];
    for (std::uint64_t idx = 1; idx <= view.ids.size(); ++idx) {
      single[0] = idx;
      consider({single, 1});
    }
  }

  // For unit-weight supports the query gap is separable, so the m elements
  // with the largest (mass - weight) differences form the exact argmax on
  // each side; random subsets alone rarely reach it on big universes.
  const std::uint64_t universe = view.ids.size();
  const double unassigned =
      state.next_index <= state.size ? state.weights[state.next_index - 1] : 0.0;
  std::vector<std::pair<double, std::uint64_t>> deltas(universe);
  for (std::uint64_t idx = 1; idx <= universe; ++idx) {
    auto it = state.assignments.find(view.ids[idx - 1]);
    const double weight = it != state.assignments.end() ? state.weights[it->second - 1] : unassigned;
    deltas[idx - 1] = {view.mass[idx - 1] - weight, idx};
  }
  const std::uint64_t take = std::min<std::uint64_t>(m, universe);
  std::vector<std::uint64_t> extreme(take);
  std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(take - 1),
                   deltas.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::uint64_t j = 0; j < take; ++j) extreme[j] = deltas[j].second;
  consider(extreme);
  std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(take - 1),
                   deltas.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::uint64_t j = 0; j < take; ++j) extreme[j] = deltas[j].second;
  consider(extreme);
  return best;
}

nlohmann::ordered_json privacy_json(const PrivacyParams& p) {
  return {{"epsilon", p.epsilon}, {"delta", p.delta}};
}

Report make_report(const std::string& scenario, nlohmann::ordered_json config,
                   std::vector<std::string> columns) {
  Report report;
  report.scenario = scenario;
  report.config = std::move(config);
  report.config_digest = sha1_hex(report.config.dump());
  report.columns = std::move(columns);
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

// Every record carries the content hash of the configuration it came from.
void tag_rows(Report& report) {
  report.columns.push_back("config_digest");
  for (auto& row : report.rows) row.push_back(report.config_digest);
}

void maybe_emit(const Report& report, const ExperimentConfig& config) {
  if (!config.out_dir.empty()) {
    emit_report(report, config.out_dir);
  }
}

}  // namespace

Database random_database(std::uint32_t universe_bits, std::uint64_t n, double skew, Rng& rng) {
  require(n >= 1, "database size must be at least 1");
  require(skew >= 1.0, "skew exponent must be at least 1");
  const std::uint64_t universe = universe_size(universe_bits);
  std::map<std::uint64_t, std::uint64_t> counts;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double u = rng.next_unit();
    std::uint64_t idx =
        static_cast<std::uint64_t>(static_cast<double>(universe) * std::pow(u, skew));
    if (idx >= universe) idx = universe - 1;
    ++counts[idx + 1];
  }
  Database db;
  for (const auto& [idx, count] : counts) {
    db.counts[element_id_for_index(idx, universe_bits)] = count;
  }
  db.total = n;
  return db;
}

Database random_distinct_database(std::uint32_t universe_bits, std::uint64_t n, Rng& rng) {
  const std::uint64_t universe = universe_size(universe_bits);
  require(n >= 1 && n <= universe, "need 1 <= n <= 2^universe_bits distinct elements");
  std::vector<std::uint64_t> pool(universe);
  std::iota(pool.begin(), pool.end(), 1);
  sample_subset(pool, n, rng);
  Database db;
  for (std::uint64_t j = 0; j < n; ++j) {
    db.counts[element_id_for_index(pool[j], universe_bits)] = 1;
  }
  db.total = n;
  return db;
}

SparseQuery random_support_query(std::uint32_t universe_bits, std::uint64_t m, bool unit_weights,
                                 Rng& rng) {
  const std::uint64_t universe = universe_size(universe_bits);
  require(m >= 1 && m <= universe, "need 1 <= m <= 2^universe_bits support elements");
  std::vector<std::uint64_t> pool(universe);
  std::iota(pool.begin(), pool.end(), 1);
  sample_subset(pool, m, rng);
  SparseQuery q;
  for (std::uint64_t j = 0; j < m; ++j) {
    q.support[element_id_for_index(pool[j], universe_bits)] =
        unit_weights ? 1.0 : rng.next_unit_open();
  }
  return q;
}

double smw_potential(const NormalizedDatabase& normalized, const SmwState& final_state,
                     std::span<const double> weights) {
  double potential = 0.0;
  for (const auto& [id, idx] : final_state.assignments) {
    auto it = normalized.weights.find(id);
    if (it == normalized.weights.end()) continue;  // zero mass contributes 0
    potential += it->second * std::log(it->second / weights[idx - 1]);
  }
  return potential;
}

AdversaryResult run_greedy_adversary(const AdversaryOptions& options, Rng& rng) {
  require(options.alpha > 0.0 && options.alpha <= 1.0, "alpha must lie in (0, 1]");
  require(options.m >= 1, "m must be at least 1");
  require(options.candidates >= 1, "need at least one candidate per round");
  const std::uint64_t universe = universe_size(options.universe_bits);
  require(options.m <= universe, "m cannot exceed the universe size");

  const std::uint64_t structure_size = smw_size(options.m, options.alpha);
  if (structure_size > kResourceGuard && !options.force) {
    fail(Errc::resource_estimate_exceeded,
         "structure size s = " + std::to_string(structure_size) +
             " exceeds the guard rail; pass force to run anyway");
  }

  AdversaryResult result;
  result.db = random_database(options.universe_bits, options.n, options.skew, rng);
  result.state = smw_init(options.m, options.alpha);
  result.bound = smw_bound(options.m, options.alpha);

  const UniverseView view = build_view(result.db, options.universe_bits);
  const bool singletons = universe <= 4096;
  std::vector<std::uint64_t> pool(universe);
  std::iota(pool.begin(), pool.end(), 1);

  if (options.record_weights) {
    result.weight_trace.push_back(result.state.weights);
  }

  // A correct update rule cannot accept more than bound updates; the hard
  // cap below only stops a runaway loop so the violation is reportable.
  const std::uint64_t hard_cap = static_cast<std::uint64_t>(std::ceil(result.bound)) + 8;
  while (true) {
    if (options.max_updates != 0 && result.updates >= options.max_updates) break;
    if (result.updates >= hard_cap) break;
    BestCandidate best = best_distinguisher(result.state, view, options.m,
                                            options.candidates, singletons, pool, rng);
    if (best.gap < options.alpha) break;
    const SparseQuery q = query_from_indices(view, best.support);
    const double exact = evaluate_exact(q, result.db);
    try {
      smw_update(result.state, q, exact);
    } catch (const Error& e) {
      if (e.code() != Errc::smw_failure) throw;
      ++result.failures;
      break;
    }
    ++result.updates;
    if (options.record_weights) {
      result.weight_trace.push_back(result.state.weights);
    }
  }

  result.final_max_gap =
      best_distinguisher(result.state, view, options.m,
                         std::max<std::uint64_t>(options.candidates, 500), singletons, pool, rng)
          .gap;
  return result;
}

Report run_smw_adversary(const ExperimentConfig& config) {
  require(!config.seeds.empty(), "seeds must be non-empty");
  require(config.n >= 1, "n is required");
  require(config.alpha > 0.0 && config.alpha <= 1.0, "alpha must lie in (0, 1]");
  require(config.m >= 1, "m is required");

  nlohmann::ordered_json cfg{{"scenario", "smw_adversary"},
                             {"seeds", config.seeds},
                             {"universe_bits", config.universe_bits},
                             {"n", config.n},
                             {"m", config.m},
                             {"alpha", config.alpha},
                             {"candidates", config.candidates},
                             {"skew", config.skew}};
  Report report = make_report(
      "smw_adversary", std::move(cfg),
      {"seed", "s", "bound", "updates", "assigned", "final_max_gap", "failures", "bound_ok",
       "failure_free", "wall_ms"});

  std::size_t passes = 0;
  std::vector<double> update_counts;
  for (std::uint64_t seed : config.seeds) {
    const auto start = Clock::now();
    Rng rng = Rng::seeded(seed);
    AdversaryOptions options;
    options.universe_bits = config.universe_bits;
    options.n = config.n;
    options.m = config.m;
    options.alpha = config.alpha;
    options.candidates = config.candidates;
    options.max_updates = config.max_updates;
    options.skew = config.skew;
    options.force = config.force;
    AdversaryResult result = run_greedy_adversary(options, rng);

    const bool bound_ok = static_cast<double>(result.updates) <= result.bound;
    const bool failure_free = result.failures == 0;
    if (bound_ok && failure_free) ++passes;
    update_counts.push_back(static_cast<double>(result.updates));
    report.rows.push_back({format_cell(seed), format_cell(result.state.size),
                           format_cell(result.bound), format_cell(result.updates),
                           format_cell(result.state.next_index - 1),
                           format_cell(result.final_max_gap), format_cell(result.failures),
                           bound_ok ? "1" : "0", failure_free ? "1" : "0",
                           format_cell(elapsed_ms(start))});
  }
  tag_rows(report);
  report.summary = {{"seeds", config.seeds.size()},
                    {"success_fraction",
                     static_cast<double>(passes) / static_cast<double>(config.seeds.size())},
                    {"median_updates", median(update_counts)},
                    {"bound", smw_bound(config.m, config.alpha)}};
  maybe_emit(report, config);
  return report;
}

Report run_interactive_e2e(const ExperimentConfig& config) {
  require(!config.seeds.empty(), "seeds must be non-empty");
  require(config.n >= 1, "n is required");
  require(config.m >= 1, "m is required");
  require(config.k >= 1, "k is required");
  require(config.alpha > 0.0 && config.alpha <= 1.0, "alpha must lie in (0, 1]");
  const std::uint64_t structure_size = smw_size(config.m, config.alpha / 2.0);
  if (structure_size > kResourceGuard && !config.force) {
    fail(Errc::resource_estimate_exceeded,
         "session needs s = " + std::to_string(structure_size) +
             " weight variables; pass force to run anyway");
  }

  nlohmann::ordered_json cfg{{"scenario", "interactive_e2e"},
                             {"seeds", config.seeds},
                             {"universe_bits", config.universe_bits},
                             {"n", config.n},
                             {"m", config.m},
                             {"k", config.k},
                             {"alpha", config.alpha},
                             {"candidates", config.candidates},
                             {"skew", config.skew}};
  Report report = make_report(
      "interactive_e2e", std::move(cfg),
      {"seed", "alpha", "s", "update_limit", "updates", "max_error", "within_alpha", "wall_ms"});

  std::size_t passes = 0;
  for (std::uint64_t seed : config.seeds) {
    const auto start = Clock::now();
    Rng rng = Rng::seeded(seed);
    Database db = random_database(config.universe_bits, config.n, config.skew, rng);
    SessionConfig sc;
    sc.privacy = config.privacy;
    sc.beta = config.beta;
    sc.max_queries = config.k;
    sc.max_sparsity = config.m;
    sc.mode = SessionMode::noise_disabled;
    sc.forced_alpha = config.alpha;
    sc.seed = seed;
    Session session(db, sc);

    const UniverseView view = build_view(db, config.universe_bits);
    const std::uint64_t universe = universe_size(config.universe_bits);
    std::vector<std::uint64_t> pool(universe);
    std::iota(pool.begin(), pool.end(), 1);
    const bool singletons = universe <= 4096;

    double max_error = 0.0;
    bool within = true;
    for (std::uint64_t j = 0; j < config.k; ++j) {
      BestCandidate best = best_distinguisher(session.state(), view, config.m,
                                              config.candidates, singletons, pool, rng);
      const SparseQuery q = query_from_indices(view, best.support);
      const double answer = session.answer(q);
      const double error = std::fabs(answer - evaluate_exact(q, db));
      max_error = std::max(max_error, error);
      if (error > config.alpha + 1e-12) within = false;
    }
    const bool updates_ok = session.updates() <= session.update_limit();
    if (within && updates_ok) ++passes;
    report.rows.push_back({format_cell(seed), format_cell(session.alpha()),
                           format_cell(session.state().size), format_cell(session.update_limit()),
                           format_cell(session.updates()), format_cell(max_error),
                           within && updates_ok ? "1" : "0", format_cell(elapsed_ms(start))});
  }
  tag_rows(report);
  report.summary = {{"seeds", config.seeds.size()},
                    {"success_fraction",
                     static_cast<double>(passes) / static_cast<double>(config.seeds.size())}};
  maybe_emit(report, config);
  return report;
}

Report run_projection_e2e(const ExperimentConfig& config) {
  require(!config.seeds.empty(), "seeds must be non-empty");
  require(config.n >= 1 && config.m >= 1 && config.k >= 1, "n, m and k are required");

  projection::PlanOverrides overrides;
  overrides.jl_constant = config.jl_constant;
  overrides.norm_bound = config.norm_bound;
  const projection::DimensionPlan plan =
      projection::choose_dimensions(config.n, config.m, config.k, config.privacy, config.beta,
                                    overrides);
  if (plan.rows > kResourceGuard && !config.force) {
    fail(Errc::resource_estimate_exceeded,
         "plan requires T = " + format_cell(plan.rows) +
             " projection rows; pass force to run anyway");
  }

  nlohmann::ordered_json cfg{{"scenario", "projection_e2e"},
                             {"seeds", config.seeds},
                             {"universe_bits", config.universe_bits},
                             {"n", config.n},
                             {"m", config.m},
                             {"k", config.k},
                             {"privacy", privacy_json(config.privacy)},
                             {"beta", config.beta},
                             {"jl_constant", config.jl_constant},
                             {"norm_bound", plan.norm_bound},
                             {"T", plan.rows},
                             {"r", plan.degree}};
  Report report = make_report(
      "projection_e2e", std::move(cfg),
      {"seed", "T", "field_bits", "degree", "max_error", "bound", "within_bound", "wall_ms"});

  const double bound = projection::theoretical_error_bound(config.n, config.m, config.k,
                                                           config.privacy, config.beta, plan.rows);
  std::size_t passes = 0;
  std::vector<double> max_errors;
  for (std::uint64_t seed : config.seeds) {
    const auto start = Clock::now();
    Rng rng = Rng::seeded(seed);
    Database db = random_distinct_database(config.universe_bits, config.n, rng);
    projection::ProjectionRelease release =
        projection::sparse_project(db, plan, config.universe_bits, rng);
    projection::ReleaseEvaluator evaluator(release);

    double max_error = 0.0;
    for (std::uint64_t j = 0; j < config.k; ++j) {
      const SparseQuery q = random_support_query(config.universe_bits, config.m, true, rng);
      const double error = std::fabs(evaluator.evaluate(q) - evaluate_exact(q, db));
      max_error = std::max(max_error, error);
    }
    const bool ok = max_error <= bound;
    if (ok) ++passes;
    max_errors.push_back(max_error);
    report.rows.push_back({format_cell(seed), format_cell(release.hash.rows),
                           format_cell(static_cast<std::uint64_t>(release.hash.field_bits)),
                           format_cell(static_cast<std::uint64_t>(release.hash.degree)),
                           format_cell(max_error), format_cell(bound), ok ? "1" : "0",
                           format_cell(elapsed_ms(start))});
  }
  tag_rows(report);
  report.summary = {{"seeds", config.seeds.size()},
                    {"success_fraction",
                     static_cast<double>(passes) / static_cast<double>(config.seeds.size())},
                    {"median_max_error", median(max_errors)},
                    {"bound", bound}};
  maybe_emit(report, config);
  return report;
}

Report run_jl_distortion(const ExperimentConfig& config) {
  require(!config.seeds.empty(), "seeds must be non-empty");
  require(config.rows_override >= 1, "rows_override (T) is required");
  require(config.tau > 0.0 && config.tau < 0.5, "tau must lie in (0, 0.5)");
  require(config.pairs >= 1 && config.matrices >= 1, "pairs and matrices are required");
  require(config.matrices <= config.pairs, "need at least one pair per matrix");
  require(config.universe_bits <= 12, "jl scenario caches dense columns; universe_bits <= 12");
  require(config.vector_support >= 1, "vector_support is required");
  if (config.rows_override > kResourceGuard && !config.force) {
    fail(Errc::resource_estimate_exceeded, "T exceeds the guard rail; pass force to run anyway");
  }

  const std::uint64_t rows = config.rows_override;
  const double ln_inv_tau = std::log(1.0 / config.tau);
  std::uint32_t degree = static_cast<std::uint32_t>(std::ceil(2.0 * ln_inv_tau));
  if (degree < 2) degree = 2;
  if (degree % 2 == 1) ++degree;
  const double varsigma = std::sqrt(config.jl_constant * ln_inv_tau / static_cast<double>(rows));

  nlohmann::ordered_json cfg{{"scenario", "jl_distortion"},
                             {"seeds", config.seeds},
                             {"universe_bits", config.universe_bits},
                             {"T", rows},
                             {"tau", config.tau},
                             {"jl_constant", config.jl_constant},
                             {"varsigma", varsigma},
                             {"degree", degree},
                             {"pairs", config.pairs},
                             {"matrices", config.matrices},
                             {"vector_support", config.vector_support}};
  Report report = make_report("jl_distortion", std::move(cfg),
                              {"seed", "T", "tau", "varsigma", "pair_violation_fraction",
                               "pair_threshold", "norm_violation_fraction", "norm_threshold", "ok",
                               "wall_ms"});

  const std::uint64_t universe = universe_size(config.universe_bits);
  projection::DimensionPlan stub;
  stub.rows = rows;
  stub.degree = degree;

  std::size_t passes = 0;
  for (std::uint64_t seed : config.seeds) {
    const auto start = Clock::now();
    Rng rng = Rng::seeded(seed);
    std::uint64_t pair_violations = 0;
    std::uint64_t norm_violations = 0;
    std::uint64_t pairs_done = 0;

    std::vector<std::uint64_t> pool(universe);
    std::iota(pool.begin(), pool.end(), 1);
    std::vector<std::vector<std::int8_t>> columns(universe);
    std::vector<double> ax(rows), ay(rows);

    for (std::uint64_t mat = 0; mat < config.matrices; ++mat) {
      const projection::HashFamilySpec spec =
          projection::sample_hash(stub, config.universe_bits, rng);
      const projection::ProjectionMatrix matrix(spec);
      std::vector<std::uint8_t> bits;
      for (std::uint64_t idx = 1; idx <= universe; ++idx) {
        matrix.column_bits(idx, bits);
        columns[idx - 1].resize(rows);
        for (std::uint64_t i = 0; i < rows; ++i) {
          columns[idx - 1][i] = bits[i] ? 1 : -1;
        }
      }

      const std::uint64_t quota =
          config.pairs / config.matrices + (mat < config.pairs % config.matrices ? 1 : 0);
      for (std::uint64_t p = 0; p < quota; ++p) {
        ++pairs_done;
        // two sparse vectors with uniform (0,1) weights
        sample_subset(pool, config.vector_support, rng);
        std::vector<std::pair<std::uint64_t, double>> x, y;
        for (std::uint64_t j = 0; j < config.vector_support; ++j) {
          x.emplace_back(pool[j], rng.next_unit_open());
        }
        sample_subset(pool, config.vector_support, rng);
        for (std::uint64_t j = 0; j < config.vector_support; ++j) {
          y.emplace_back(pool[j], rng.next_unit_open());
        }

        double xx = 0.0, yy = 0.0, xy = 0.0;
        for (const auto& [idx, w] : x) xx += w * w;
        for (const auto& [idx, w] : y) yy += w * w;
        for (const auto& [xi, xw] : x) {
          for (const auto& [yi, yw] : y) {
            if (xi == yi) xy += xw * yw;
          }
        }

        std::fill(ax.begin(), ax.end(), 0.0);
        for (const auto& [idx, w] : x) {
          const auto& col = columns[idx - 1];
          for (std::uint64_t i = 0; i < rows; ++i) ax[i] += w * col[i];
        }
        std::fill(ay.begin(), ay.end(), 0.0);
        for (const auto& [idx, w] : y) {
          const auto& col = columns[idx - 1];
          for (std::uint64_t i = 0; i < rows; ++i) ay[i] += w * col[i];
        }
        const double scale2 = 1.0 / static_cast<double>(rows);
        double axax = 0.0, ayay = 0.0, axay = 0.0;
        for (std::uint64_t i = 0; i < rows; ++i) {
          axax += ax[i] * ax[i];
          ayay += ay[i] * ay[i];
          axay += ax[i] * ay[i];
        }
        axax *= scale2;
        ayay *= scale2;
        axay *= scale2;

        if (std::fabs(axay - xy) > 0.5 * varsigma * (xx + yy)) ++pair_violations;
        if (std::fabs(axax - xx) > varsigma * xx) ++norm_violations;
        if (std::fabs(ayay - yy) > varsigma * yy) ++norm_violations;
      }
    }

    const double n_pairs = static_cast<double>(pairs_done);
    const double n_vectors = 2.0 * n_pairs;
    const double pair_fraction = static_cast<double>(pair_violations) / n_pairs;
    const double norm_fraction = static_cast<double>(norm_violations) / n_vectors;
    const double p2 = 2.0 * config.tau;
    const double pair_threshold = p2 + 3.0 * std::sqrt(p2 * (1.0 - p2) / n_pairs);
    const double norm_threshold =
        config.tau + 3.0 * std::sqrt(config.tau * (1.0 - config.tau) / n_vectors);
    const bool ok = pair_fraction <= pair_threshold && norm_fraction <= norm_threshold;
    if (ok) ++passes;
    report.rows.push_back({format_cell(seed), format_cell(rows), format_cell(config.tau),
                           format_cell(varsigma), format_cell(pair_fraction),
                           format_cell(pair_threshold), format_cell(norm_fraction),
                           format_cell(norm_threshold), ok ? "1" : "0",
                           format_cell(elapsed_ms(start))});
  }
  tag_rows(report);
  report.summary = {{"seeds", config.seeds.size()},
                    {"success_fraction",
                     static_cast<double>(passes) / static_cast<double>(config.seeds.size())}};
  maybe_emit(report, config);
  return report;
}

Report run_conjunction_check(const ExperimentConfig& config) {
  require(!config.seeds.empty(), "seeds must be non-empty");
  require(config.dimension >= 1 && config.dimension <= 20,
          "dimension must be in 1..20 for the exhaustive scan");
  require(config.fixed_literals >= 1 && config.fixed_literals <= config.dimension,
          "fixed_literals must be in 1..dimension");
  require(config.trials >= 1, "trials is required");
  require(config.n >= 1, "n is required");

  const std::uint32_t d = config.dimension;
  const std::uint32_t free_bits = d - static_cast<std::uint32_t>(config.fixed_literals);
  const std::uint64_t expected_support = std::uint64_t{1} << free_bits;
  const std::uint64_t hypercube = std::uint64_t{1} << d;

  nlohmann::ordered_json cfg{{"scenario", "conjunction_check"},
                             {"seeds", config.seeds},
                             {"dimension", d},
                             {"fixed_literals", config.fixed_literals},
                             {"trials", config.trials},
                             {"n", config.n}};
  Report report = make_report("conjunction_check", std::move(cfg),
                              {"seed", "dimension", "fixed", "trials", "support_size",
                               "expected_support", "max_abs_diff", "ok", "wall_ms"});

  std::size_t passes = 0;
  for (std::uint64_t seed : config.seeds) {
    const auto start = Clock::now();
    Rng rng = Rng::seeded(seed);
    double max_diff = 0.0;
    bool support_ok = true;
    std::uint64_t support_size = 0;

    std::vector<std::uint32_t> positions(d);
    std::iota(positions.begin(), positions.end(), 1);
    std::vector<std::uint64_t> counts(hypercube);
    std::vector<std::uint8_t> in_support(hypercube);

    for (std::uint64_t trial = 0; trial < config.trials; ++trial) {
      for (std::uint64_t j = 0; j < config.fixed_literals; ++j) {
        const std::uint64_t swap_at = j + rng.next_below(positions.size() - j);
        std::swap(positions[j], positions[swap_at]);
      }
      ConjunctionSpec spec;
      spec.dimension = d;
      spec.fixed_positions.assign(positions.begin(),
                                  positions.begin() + static_cast<std::ptrdiff_t>(config.fixed_literals));
      const SparseQuery q = conjunction_to_sparse(spec, expected_support);
      support_size = sparsity(q);
      if (support_size != expected_support) support_ok = false;

      const Database db = random_database(d, config.n, 1.0, rng);
      const double answer = evaluate_exact(q, db);

      // Brute-force oracle over the full hypercube using the product form.
      std::fill(counts.begin(), counts.end(), 0);
      for (const auto& [id, count] : db.counts) {
        counts[element_index(id, d) - 1] = count;
      }
      std::fill(in_support.begin(), in_support.end(), 0);
      for (const auto& [id, weight] : q.support) {
        (void)weight;
        in_support[element_index(id, d) - 1] = 1;
      }
      double brute_sum = 0.0;
      bool membership_ok = true;
      for (std::uint64_t x = 0; x < hypercube; ++x) {
        std::uint64_t product = 1;
        for (std::uint32_t p : spec.fixed_positions) {
          product *= (x >> (d - p)) & 1ull;
        }
        if (product == 1) brute_sum += static_cast<double>(counts[x]);
        if ((product == 1) != (in_support[x] == 1)) membership_ok = false;
      }
      const double brute = brute_sum / static_cast<double>(db.total);
      max_diff = std::max(max_diff, std::fabs(answer - brute));
      if (!membership_ok) support_ok = false;
    }

    const bool ok = support_ok && max_diff <= 1e-12;
    if (ok) ++passes;
    report.rows.push_back({format_cell(seed), format_cell(static_cast<std::uint64_t>(d)),
                           format_cell(config.fixed_literals), format_cell(config.trials),
                           format_cell(support_size), format_cell(expected_support),
                           format_cell(max_diff), ok ? "1" : "0", format_cell(elapsed_ms(start))});
  }
  tag_rows(report);
  report.summary = {{"seeds", config.seeds.size()},
                    {"success_fraction",
                     static_cast<double>(passes) / static_cast<double>(config.seeds.size())}};
  maybe_emit(report, config);
  return report;
}

Report run_scenario(const ExperimentConfig& config) {
  if (config.scenario == "smw_adversary") return run_smw_adversary(config);
  if (config.scenario == "interactive_e2e") return run_interactive_e2e(config);
  if (config.scenario == "projection_e2e") return run_projection_e2e(config);
  if (config.scenario == "jl_distortion") return run_jl_distortion(config);
  if (config.scenario == "conjunction_check") return run_conjunction_check(config);
  fail(Errc::validation_error, "unknown scenario '" + config.scenario + "'");
}

}  // namespace sparseq::bench
