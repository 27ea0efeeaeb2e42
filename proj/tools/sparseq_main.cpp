// sparseq: release and query sparse linear statistics under differential
// privacy. Subcommands: ingest, serve, release, eval, bench, conj-expand.
//
// Exit codes: 0 success, 2 validation/usage, 3 assertion or acceptance
// failure, 4 resource guard.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sparseq/bench.hpp"
#include "sparseq/data_model.hpp"
#include "sparseq/errors.hpp"
#include "sparseq/interactive.hpp"
#include "sparseq/projection.hpp"
#include "sparseq/queries.hpp"

namespace {

using namespace sparseq;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::smw_failure:
    case Errc::update_budget_exhausted:
    case Errc::budget_exceeded:
      return 3;
    case Errc::resource_estimate_exceeded:
      return 4;
    default:
      return 2;
  }
}

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

void log_info(const GlobalFlags& flags, const std::string& message) {
  if (flags.log_level != "quiet") {
    std::cerr << message << "\n";
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string token = text.substr(pos, comma - pos);
    if (!token.empty()) {
      seeds.push_back(std::stoull(token));
    }
    pos = comma + 1;
  }
  if (seeds.empty()) {
    fail(Errc::validation_error, "seed list is empty");
  }
  return seeds;
}

int cmd_ingest(const GlobalFlags& flags, const std::string& db_path, const std::string& out_path) {
  LoadedDatabase loaded = load_database_file(db_path);
  std::printf("records=%" PRIu64 " distinct=%zu", loaded.db.total, loaded.db.counts.size());
  if (loaded.universe_bits) {
    std::printf(" universe_bits=%u", *loaded.universe_bits);
  }
  std::printf("\n");
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) fail(Errc::io_error, "cannot write '" + out_path + "'");
    if (loaded.universe_bits) {
      out << "{\"universe_bits\": " << *loaded.universe_bits << "}\n";
    }
    for (const auto& [id, count] : loaded.db.counts) {
      out << "{\"id\": " << nlohmann::json(id).dump() << ", \"count\": " << count << "}\n";
    }
    log_info(flags, "wrote canonical histogram to " + out_path);
  }
  return 0;
}

int cmd_serve(const GlobalFlags& flags, const std::string& db_path, SessionConfig config) {
  LoadedDatabase loaded = load_database_file(db_path);
  if (!config.seed) config.seed = flags.seed;
  Session session(loaded.db, config);
  log_info(flags, "session open: alpha=" + std::to_string(session.alpha()) +
                      " s=" + std::to_string(session.state().size) +
                      " update_limit=" + std::to_string(session.update_limit()));
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    const SparseQuery q = parse_query(line, config.max_sparsity);
    const double answer = session.answer(q);
    std::printf("%.17g\n", answer);
    std::fflush(stdout);
  }
  log_info(flags, "served " + std::to_string(session.answered()) + " queries, " +
                      std::to_string(session.updates()) + " updates");
  return 0;
}

int cmd_release(const GlobalFlags& flags, const std::string& db_path, const std::string& out_path,
                std::uint64_t m, std::uint64_t k, PrivacyParams privacy, double beta,
                double jl_constant, std::optional<double> norm_bound, bool force) {
  LoadedDatabase loaded = load_database_file(db_path);
  if (!loaded.universe_bits) {
    fail(Errc::validation_error,
         "database file must declare {\"universe_bits\": L} for projection mode");
  }
  projection::PlanOverrides overrides;
  overrides.jl_constant = jl_constant;
  overrides.norm_bound = norm_bound;
  const projection::DimensionPlan plan =
      projection::choose_dimensions(loaded.db.total, m, k, privacy, beta, overrides);
  if (plan.rows > bench::kResourceGuard && !force) {
    fail(Errc::resource_estimate_exceeded,
         "plan requires T = " + format_cell(plan.rows) + " rows; rerun with --force to proceed");
  }
  Rng rng = flags.seed ? Rng::seeded(*flags.seed) : Rng::system();
  const projection::ProjectionRelease release =
      projection::sparse_project(loaded.db, plan, *loaded.universe_bits, rng);
  projection::write_release_file(release, out_path);
  log_info(flags, "release written: T=" + std::to_string(release.hash.rows) +
                      " field_bits=" + std::to_string(release.hash.field_bits) +
                      " degree=" + std::to_string(release.hash.degree));
  return 0;
}

int cmd_eval(const GlobalFlags& flags, const std::string& release_path,
             const std::string& queries_path, const std::string& out_path) {
  const projection::ProjectionRelease release = projection::read_release_file(release_path);
  projection::ReleaseEvaluator evaluator(release);
  std::ifstream queries(queries_path);
  if (!queries) fail(Errc::io_error, "cannot open queries file '" + queries_path + "'");
  std::ofstream out(out_path);
  if (!out) fail(Errc::io_error, "cannot write '" + out_path + "'");
  out << "query,answer\n";
  std::string line;
  std::size_t index = 0;
  char buf[40];
  while (std::getline(queries, line)) {
    if (line.empty()) continue;
    ++index;
    const SparseQuery q = parse_query(line, std::numeric_limits<std::size_t>::max());
    const double answer = evaluator.evaluate(q);
    std::snprintf(buf, sizeof(buf), "%.17g", answer);
    out << (q.label.empty() ? std::to_string(index) : q.label) << ',' << buf << '\n';
  }
  log_info(flags, "evaluated " + std::to_string(index) + " queries");
  return 0;
}

int cmd_conj_expand(const std::string& in_path, const std::string& out_path,
                    std::uint64_t m_cap) {
  std::ifstream in(in_path);
  if (!in) fail(Errc::io_error, "cannot open '" + in_path + "'");
  const std::vector<ConjunctionSpec> specs = load_conjunctions_jsonl(in);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) fail(Errc::io_error, "cannot write '" + out_path + "'");
    out = &file;
  }
  std::size_t index = 0;
  for (const auto& spec : specs) {
    ++index;
    SparseQuery q = conjunction_to_sparse(spec, m_cap);
    q.label = "conj" + std::to_string(index);
    (*out) << serialize_query(q) << '\n';
  }
  return 0;
}

int cmd_bench(const GlobalFlags& flags, bench::ExperimentConfig config) {
  const Report report = bench::run_scenario(config);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    std::string line = report.scenario;
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      line += ' ' + report.columns[c] + '=' + report.rows[i][c];
    }
    std::printf("%s\n", line.c_str());
  }
  const double success = report.summary.value("success_fraction", 0.0);
  const double needed = config.scenario == "projection_e2e" ? 0.9 : 1.0;
  std::printf("%s success_fraction=%g required=%g\n", report.scenario.c_str(), success, needed);
  log_info(flags, "config digest " + report.config_digest);
  if (success + 1e-12 < needed) {
    std::cerr << "scenario '" << config.scenario << "' failed its acceptance threshold\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse linear query release under differential privacy"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "seed for deterministic randomness");
  app.add_option("--log-level", flags.log_level, "quiet|info")
      ->check(CLI::IsMember({"quiet", "info"}));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate and summarize a histogram file");
  ingest->fallthrough();
  std::string ingest_db, ingest_out;
  ingest->add_option("--db", ingest_db, "JSONL histogram file")->required();
  ingest->add_option("--out", ingest_out, "write the canonical histogram here");

  // serve
  auto* serve = app.add_subcommand("serve", "answer queries interactively on stdin/stdout");
  serve->fallthrough();
  std::string serve_db;
  SessionConfig serve_config;
  bool serve_noise_disabled = false;
  double serve_forced_alpha = 0.0;
  serve->add_option("--db", serve_db, "JSONL histogram file")->required();
  serve->add_option("--epsilon", serve_config.privacy.epsilon, "privacy budget epsilon")->required();
  serve->add_option("--delta", serve_config.privacy.delta, "privacy budget delta")->required();
  serve->add_option("--beta", serve_config.beta, "failure probability")->required();
  serve->add_option("--k", serve_config.max_queries, "maximum number of queries")->required();
  serve->add_option("--m", serve_config.max_sparsity, "sparsity cap")->required();
  serve->add_flag("--noise-disabled", serve_noise_disabled, "answer without noise (testing)");
  auto* serve_alpha_opt =
      serve->add_option("--alpha", serve_forced_alpha, "force the accuracy target (testing)");

  // release
  auto* release = app.add_subcommand("release", "build a noisy projected release");
  release->fallthrough();
  std::string release_db, release_out;
  std::uint64_t release_m = 0, release_k = 0;
  PrivacyParams release_privacy;
  double release_beta = 0.1;
  double release_jl = 4.0 * 64.0 * 64.0;
  double release_norm_bound = -1.0;
  bool release_force = false;
  release->add_option("--db", release_db, "JSONL histogram file with a universe_bits header")
      ->required();
  release->add_option("--epsilon", release_privacy.epsilon)->required();
  release->add_option("--delta", release_privacy.delta)->required();
  release->add_option("--beta", release_beta)->required();
  release->add_option("--m", release_m, "query sparsity bound")->required();
  release->add_option("--k", release_k, "target query-class size")->required();
  release->add_option("--jl-constant", release_jl, "projection dimension constant");
  auto* release_norm_opt =
      release->add_option("--norm-bound", release_norm_bound, "squared-norm bound rho");
  release->add_option("--out", release_out, "release file path")->required();
  release->add_flag("--force", release_force, "override the resource guard");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate queries against a release file");
  eval->fallthrough();
  std::string eval_release, eval_queries, eval_out;
  eval->add_option("--release", eval_release)->required();
  eval->add_option("--queries", eval_queries, "one query per line")->required();
  eval->add_option("--out", eval_out, "CSV output path")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run a reproducible experiment scenario");
  bench_cmd->fallthrough();
  bench::ExperimentConfig bench_config;
  std::string bench_seeds = "1,2,3,4,5";
  double bench_norm_bound = -1.0;
  bench_cmd->add_option("--scenario", bench_config.scenario,
                        "smw_adversary|interactive_e2e|projection_e2e|jl_distortion|conjunction_check")
      ->required();
  bench_cmd->add_option("--seeds", bench_seeds, "comma-separated seed list");
  bench_cmd->add_option("--out", bench_config.out_dir, "report directory");
  bench_cmd->add_option("--n", bench_config.n);
  bench_cmd->add_option("--m", bench_config.m);
  bench_cmd->add_option("--k", bench_config.k);
  bench_cmd->add_option("--alpha", bench_config.alpha);
  bench_cmd->add_option("--epsilon", bench_config.privacy.epsilon);
  bench_cmd->add_option("--delta", bench_config.privacy.delta);
  bench_cmd->add_option("--beta", bench_config.beta);
  bench_cmd->add_option("--universe-bits", bench_config.universe_bits);
  bench_cmd->add_option("--jl-constant", bench_config.jl_constant);
  auto* bench_norm_opt = bench_cmd->add_option("--norm-bound", bench_norm_bound);
  bench_cmd->add_option("--candidates", bench_config.candidates);
  bench_cmd->add_option("--max-updates", bench_config.max_updates);
  bench_cmd->add_option("--skew", bench_config.skew);
  bench_cmd->add_option("--pairs", bench_config.pairs);
  bench_cmd->add_option("--matrices", bench_config.matrices);
  bench_cmd->add_option("--vector-support", bench_config.vector_support);
  bench_cmd->add_option("--rows", bench_config.rows_override);
  bench_cmd->add_option("--tau", bench_config.tau);
  bench_cmd->add_option("--trials", bench_config.trials);
  bench_cmd->add_option("--dimension", bench_config.dimension);
  bench_cmd->add_option("--fixed-literals", bench_config.fixed_literals);
  bench_cmd->add_flag("--force", bench_config.force, "override the resource guard");

  // conj-expand
  auto* conj = app.add_subcommand("conj-expand", "expand conjunctions to sparse queries");
  conj->fallthrough();
  std::string conj_in, conj_out;
  std::uint64_t conj_cap = 1 << 20;
  conj->add_option("--in", conj_in, "JSONL conjunction file")->required();
  conj->add_option("--out", conj_out, "query file (default stdout)");
  conj->add_option("--m-cap", conj_cap, "sparsity cap for expansion");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) flags.seed = seed_value;

  try {
    if (*ingest) return cmd_ingest(flags, ingest_db, ingest_out);
    if (*serve) {
      serve_config.mode =
          serve_noise_disabled ? SessionMode::noise_disabled : SessionMode::private_mode;
      if (*serve_alpha_opt) serve_config.forced_alpha = serve_forced_alpha;
      serve_config.seed = flags.seed;
      return cmd_serve(flags, serve_db, serve_config);
    }
    if (*release) {
      std::optional<double> norm_bound;
      if (*release_norm_opt) norm_bound = release_norm_bound;
      return cmd_release(flags, release_db, release_out, release_m, release_k, release_privacy,
                         release_beta, release_jl, norm_bound, release_force);
    }
    if (*eval) return cmd_eval(flags, eval_release, eval_queries, eval_out);
    if (*bench_cmd) {
      bench_config.seeds = parse_seed_list(bench_seeds);
      if (*bench_norm_opt) bench_config.norm_bound = bench_norm_bound;
      return cmd_bench(flags, bench_config);
    }
    if (*conj) return cmd_conj_expand(conj_in, conj_out, conj_cap);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
