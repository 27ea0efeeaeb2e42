#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "sparseq/bench.hpp"
#include "sparseq/report.hpp"

using namespace sparseq;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string join_columns(const std::vector<std::string>& columns) {
  std::string joined;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) joined += ',';
    joined += columns[i];
  }
  return joined;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sparseq_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string command = std::string(SPARSEQ_CLI_PATH) + " " + args;
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sha1 known vectors") {
  CHECK(sha1_hex(std::string("")) == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(sha1_hex(std::string("abc")) == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_hex(std::string("The quick brown fox jumps over the lazy dog")) ==
        "2fd4e1c67a2d28fced849ee1bb76e7391b93eb12");
}

TEST_CASE("emit_report is deterministic and creates directories") {
  Report report;
  report.scenario = "demo";
  report.config = {{"n", 10}, {"alpha", 0.5}};
  report.config_digest = sha1_hex(report.config.dump());
  report.columns = {"seed", "value"};
  report.rows = {{"1", "0.25"}, {"2", "0.5"}};
  report.summary = {{"success_fraction", 1.0}};

  const fs::path dir = fresh_dir("emit") / "nested" / "deeper";
  emit_report(report, dir.string());
  const std::string csv_a = read_file(dir / "demo.csv");
  const std::string json_a = read_file(dir / "demo_summary.json");
  emit_report(report, dir.string());
  CHECK(read_file(dir / "demo.csv") == csv_a);
  CHECK(read_file(dir / "demo_summary.json") == json_a);
  CHECK(csv_a == "seed,value\n1,0.25\n2,0.5\n");
  CHECK(json_a.find("\"config_digest\"") != std::string::npos);
}

TEST_CASE("scenario validation fails fast") {
  bench::ExperimentConfig config;
  config.scenario = "smw_adversary";
  config.seeds = {1};
  config.n = 100;
  config.m = 8;
  config.alpha = 1.1;
  CHECK_THROWS_AS(bench::run_scenario(config), Error);

  config.alpha = 0.25;
  config.seeds.clear();
  CHECK_THROWS_AS(bench::run_scenario(config), Error);

  bench::ExperimentConfig projection;
  projection.scenario = "projection_e2e";
  projection.seeds = {1};
  projection.n = 100;
  projection.m = 8;
  projection.k = 0;
  CHECK_THROWS_AS(bench::run_scenario(projection), Error);

  bench::ExperimentConfig unknown;
  unknown.scenario = "nope";
  unknown.seeds = {1};
  CHECK_THROWS_AS(bench::run_scenario(unknown), Error);
}

TEST_CASE("paper-constant plans trip the resource guard") {
  bench::ExperimentConfig config;
  config.scenario = "projection_e2e";
  config.seeds = {1};
  config.n = 100;
  config.m = 8;
  config.k = 50;
  config.universe_bits = 8;
  // defaults: jl_constant 16384, norm bound n^2
  try {
    bench::run_scenario(config);
    FAIL("expected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::resource_estimate_exceeded);
    CHECK(std::string(e.what()).find("T = ") != std::string::npos);
  }
}

TEST_CASE("scenario smoke runs emit reports whose headers match the README") {
  const fs::path dir = fresh_dir("scenarios");
  const std::string readme = read_file(SPARSEQ_README_PATH);

  bench::ExperimentConfig smw;
  smw.scenario = "smw_adversary";
  smw.seeds = {1, 2};
  smw.universe_bits = 6;
  smw.n = 150;
  smw.m = 8;
  smw.alpha = 0.3;
  smw.candidates = 60;
  smw.skew = 3.0;
  smw.out_dir = dir.string();
  const Report smw_report = bench::run_scenario(smw);
  CHECK(smw_report.summary["success_fraction"] == 1.0);
  CHECK(readme.find(join_columns(smw_report.columns)) != std::string::npos);

  bench::ExperimentConfig inter;
  inter.scenario = "interactive_e2e";
  inter.seeds = {1};
  inter.universe_bits = 6;
  inter.n = 150;
  inter.m = 8;
  inter.k = 40;
  inter.alpha = 0.3;
  inter.candidates = 40;
  inter.out_dir = dir.string();
  const Report inter_report = bench::run_scenario(inter);
  CHECK(inter_report.summary["success_fraction"] == 1.0);
  CHECK(readme.find(join_columns(inter_report.columns)) != std::string::npos);

  bench::ExperimentConfig proj;
  proj.scenario = "projection_e2e";
  proj.seeds = {1, 2, 3};
  proj.universe_bits = 6;
  proj.n = 20;
  proj.m = 4;
  proj.k = 5;
  proj.privacy = {1.0, 1e-6};
  proj.beta = 0.1;
  proj.jl_constant = 8.0;
  proj.norm_bound = 20.0;
  proj.out_dir = dir.string();
  const Report proj_report = bench::run_scenario(proj);
  CHECK(proj_report.summary["success_fraction"] == doctest::Approx(1.0));
  CHECK(readme.find(join_columns(proj_report.columns)) != std::string::npos);

  bench::ExperimentConfig jl;
  jl.scenario = "jl_distortion";
  jl.seeds = {1};
  jl.universe_bits = 6;
  jl.rows_override = 128;
  jl.tau = 0.05;
  jl.jl_constant = 8.0;
  jl.pairs = 60;
  jl.matrices = 6;
  jl.vector_support = 4;
  jl.out_dir = dir.string();
  const Report jl_report = bench::run_scenario(jl);
  CHECK(readme.find(join_columns(jl_report.columns)) != std::string::npos);

  bench::ExperimentConfig conj;
  conj.scenario = "conjunction_check";
  conj.seeds = {1};
  conj.dimension = 8;
  conj.fixed_literals = 6;
  conj.trials = 3;
  conj.n = 50;
  conj.out_dir = dir.string();
  const Report conj_report = bench::run_scenario(conj);
  CHECK(conj_report.summary["success_fraction"] == 1.0);
  CHECK(readme.find(join_columns(conj_report.columns)) != std::string::npos);

  // every emitted row carries the config digest tag in the summary file
  for (const std::string name :
       {"smw_adversary", "interactive_e2e", "projection_e2e", "jl_distortion",
        "conjunction_check"}) {
    CHECK(fs::exists(dir / (name + ".csv")));
    const std::string summary = read_file(dir / (name + "_summary.json"));
    CHECK(summary.find("config_digest") != std::string::npos);
  }
}

TEST_CASE("experiments are reproducible from (config, seed)") {
  bench::ExperimentConfig config;
  config.scenario = "smw_adversary";
  config.seeds = {3, 9};
  config.universe_bits = 6;
  config.n = 120;
  config.m = 8;
  config.alpha = 0.3;
  config.candidates = 50;
  config.skew = 4.0;
  const Report a = bench::run_scenario(config);
  const Report b = bench::run_scenario(config);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.config_digest == b.config_digest);
  for (std::size_t row = 0; row < a.rows.size(); ++row) {
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
      if (a.columns[c] == "wall_ms") continue;  // the one measurement, not an outcome
      CHECK(a.rows[row][c] == b.rows[row][c]);
    }
  }
}

TEST_CASE("cli round trip: ingest, conj-expand, release, eval, serve") {
  const fs::path dir = fresh_dir("cli");
  fs::create_directories(dir);

  const fs::path db_path = dir / "db.jsonl";
  {
    std::ofstream db(db_path);
    db << "{\"universe_bits\": 6}\n";
    for (int i = 1; i <= 20; ++i) {
      db << "{\"id\": \"" << element_id_for_index(i, 6) << "\", \"count\": " << (i % 3 + 1)
         << "}\n";
    }
  }

  CHECK(run_cli("ingest --db " + db_path.string() + " > " + (dir / "ingest.txt").string()) == 0);
  CHECK(read_file(dir / "ingest.txt").find("distinct=20") != std::string::npos);
  CHECK(run_cli("ingest --db /nonexistent 2>/dev/null") == 2);

  // canonicalization is a fixed point: re-ingesting the emitted file
  // reproduces it byte for byte
  const fs::path canon1 = dir / "canon1.jsonl";
  const fs::path canon2 = dir / "canon2.jsonl";
  CHECK(run_cli("ingest --db " + db_path.string() + " --out " + canon1.string() +
                " >/dev/null 2>/dev/null") == 0);
  CHECK(run_cli("ingest --db " + canon1.string() + " --out " + canon2.string() +
                " >/dev/null 2>/dev/null") == 0);
  CHECK(read_file(canon1) == read_file(canon2));

  const fs::path conj_path = dir / "conj.jsonl";
  {
    std::ofstream conj(conj_path);
    conj << "{\"d\": 6, \"fixed\": [1, 2, 3, 4]}\n";
  }
  const fs::path queries_path = dir / "queries.txt";
  CHECK(run_cli("conj-expand --in " + conj_path.string() + " --m-cap 8 --out " +
                queries_path.string()) == 0);
  const std::string queries = read_file(queries_path);
  CHECK(queries.find("conj1|") != std::string::npos);

  const fs::path release_path = dir / "out.sprj";
  CHECK(run_cli("--seed 9 release --db " + db_path.string() +
                " --epsilon 1 --delta 1e-6 --beta 0.1 --m 4 --k 10 --jl-constant 8 "
                "--norm-bound 30 --out " +
                release_path.string() + " 2>/dev/null") == 0);

  // the same seed reproduces the release byte for byte
  const fs::path release_again = dir / "again.sprj";
  CHECK(run_cli("--seed 9 release --db " + db_path.string() +
                " --epsilon 1 --delta 1e-6 --beta 0.1 --m 4 --k 10 --jl-constant 8 "
                "--norm-bound 30 --out " +
                release_again.string() + " 2>/dev/null") == 0);
  CHECK(read_file(release_path) == read_file(release_again));
  const fs::path eval_path = dir / "answers.csv";
  CHECK(run_cli("eval --release " + release_path.string() + " --queries " +
                queries_path.string() + " --out " + eval_path.string() + " 2>/dev/null") == 0);
  const std::string answers = read_file(eval_path);
  CHECK(answers.rfind("query,answer\n", 0) == 0);
  CHECK(answers.find("conj1,") != std::string::npos);

  // serve: two valid queries answered without noise, exact values
  const fs::path in_path = dir / "stdin.txt";
  {
    std::ofstream in(in_path);
    in << "000000:1.0\n000001:1.0 000010:1.0\n";
  }
  const fs::path serve_out = dir / "serve.txt";
  CHECK(run_cli("serve --db " + db_path.string() +
                " --epsilon 1 --delta 1e-6 --beta 0.1 --k 10 --m 4 --noise-disabled "
                "--alpha 0.5 --seed 3 < " +
                in_path.string() + " > " + serve_out.string() + " 2>/dev/null") == 0);
  std::istringstream serve_lines(read_file(serve_out));
  std::string line;
  int answered = 0;
  while (std::getline(serve_lines, line)) {
    if (!line.empty()) ++answered;
  }
  CHECK(answered == 2);

  // oversized query is fatal misuse -> exit 2
  {
    std::ofstream in(in_path);
    in << "000000:1.0 000001:1.0 000010:1.0 000011:1.0 000100:1.0\n";
  }
  CHECK(run_cli("serve --db " + db_path.string() +
                " --epsilon 1 --delta 1e-6 --beta 0.1 --k 10 --m 4 --noise-disabled "
                "--alpha 0.5 < " +
                in_path.string() + " >/dev/null 2>/dev/null") == 2);

  // paper-constant release plan trips the guard -> exit 4
  CHECK(run_cli("release --db " + db_path.string() +
                " --epsilon 1 --delta 1e-6 --beta 0.1 --m 4 --k 10 --out " +
                (dir / "huge.sprj").string() + " 2>/dev/null") == 4);

  // bench smoke through the CLI
  CHECK(run_cli("bench --scenario conjunction_check --seeds 1 --dimension 8 "
                "--fixed-literals 6 --trials 2 --n 40 --out " +
                (dir / "bench").string() + " > /dev/null 2>/dev/null") == 0);

  // an undersized distortion constant genuinely breaks the distortion
  // check, which must surface as the assertion exit code
  CHECK(run_cli("bench --scenario jl_distortion --seeds 1 --universe-bits 6 --rows 64 "
                "--tau 0.01 --jl-constant 0.05 --pairs 400 --matrices 4 --vector-support 4 "
                "> /dev/null 2>/dev/null") == 3);
}
