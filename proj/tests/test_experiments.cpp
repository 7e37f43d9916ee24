#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "kcsm/common.hpp"
#include "kcsm/experiments.hpp"

using namespace kcsm;
using namespace kcsm::expt;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("kcsm_expt_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// strips the leading '#' comment lines (the body must be byte-identical
// across runs; comments carry the config echo, which is also identical)
std::string csv_body(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out << line << "\n";
  return out.str();
}

}  // namespace

TEST_CASE("config merging: overrides win, objects merge recursively") {
  json base = {{"schema", 1}, {"q", 0.5}, {"output", {{"dir", "a"}, {"prefix", "x"}}}};
  json over = {{"q", 0.3}, {"output", {{"dir", "b"}}}};
  json merged = merge_config(base, over);
  CHECK(merged["schema"] == 1);
  CHECK(merged["q"] == 0.3);
  CHECK(merged["output"]["dir"] == "b");
  CHECK(merged["output"]["prefix"] == "x");
}

TEST_CASE("gap sweep writes the documented CSV") {
  TempDir tmp;
  json cfg = {{"schema", 1},
              {"subcommand", "gap"},
              {"model", "east"},
              {"n", {{"from", 2}, {"to", 10}, {"step", 1}}},
              {"q", 0.5},
              {"output", {{"dir", tmp.path.string()}, {"prefix", "gap"}}}};
  RunResult res = run_experiment(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary["rows"] == 9);

  std::istringstream in(csv_body(slurp(tmp.path / "gap.csv")));
  std::string header;
  std::getline(in, header);
  CHECK(header == "model,n,q,states,components,gap,residual");
  int rows = 0;
  double prev_gap = 1e300;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    // gap column strictly positive and nonincreasing in n
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    double gap = std::stod(cells[5]);
    CHECK(gap > 0.0);
    CHECK(gap <= prev_gap + 1e-12);
    prev_gap = gap;
  }
  CHECK(rows == 9);
  CHECK(fs::exists(tmp.path / "gap.manifest.json"));
}

TEST_CASE("stochastic subcommands demand a seed") {
  TempDir tmp;
  json cfg = {{"schema", 1},
              {"subcommand", "persistence"},
              {"n", 3},
              {"q", 0.5},
              {"samples", 10},
              {"output", {{"dir", tmp.path.string()}}}};
  CHECK_THROWS_AS(run_experiment(cfg), Error);
  RunResult res = run_to_result(cfg.dump());
  CHECK(res.exit_code == kValidationError);
  CHECK(res.summary.contains("error"));
}

TEST_CASE("unknown subcommands and bad schemas map to validation errors") {
  CHECK(run_to_result(R"({"schema":1,"subcommand":"frobnicate"})").exit_code == 2);
  CHECK(run_to_result(R"({"schema":7,"subcommand":"gap"})").exit_code == 2);
  CHECK(run_to_result("not json").exit_code == 2);
  // size caps surface as validation errors with actionable text
  json cfg = {{"schema", 1}, {"subcommand", "gap"}, {"model", "east"},
              {"n", 30},     {"q", 0.5}};
  RunResult res = run_to_result(cfg.dump());
  CHECK(res.exit_code == 2);
  std::string msg = res.summary["error"].get<std::string>();
  CHECK(msg.find("24") != std::string::npos);
}

TEST_CASE("CSV bodies are byte-identical across runs and worker counts") {
  json base = {{"schema", 1},
               {"subcommand", "persistence"},
               {"model", "east"},
               {"n", 5},
               {"q", {0.4, 0.6}},
               {"samples", 400},
               {"seed", 2024},
               {"t_grid", {{"max", 4.0}, {"points", 8}}}};

  TempDir d1, d2, d3;
  json c1 = base;
  c1["output"] = {{"dir", d1.path.string()}, {"prefix", "p"}};
  json c2 = base;
  c2["output"] = {{"dir", d2.path.string()}, {"prefix", "p"}};
  json c3 = base;
  c3["output"] = {{"dir", d3.path.string()}, {"prefix", "p"}};

  ::setenv("KCSM_WORKERS", "1", 1);
  run_experiment(c1);
  run_experiment(c2);
  ::setenv("KCSM_WORKERS", "3", 1);
  run_experiment(c3);
  ::unsetenv("KCSM_WORKERS");

  std::string b1 = csv_body(slurp(d1.path / "p.csv"));
  std::string b2 = csv_body(slurp(d2.path / "p.csv"));
  std::string b3 = csv_body(slurp(d3.path / "p.csv"));
  CHECK(b1 == b2);
  CHECK(b1 == b3);
  CHECK(b1.find("q,t,F_hat,F0_hat,F1_hat,stderr,n,bound") == 0);
}

TEST_CASE("bootstrap scan output records the seed and the estimate") {
  TempDir tmp;
  json cfg = {{"schema", 1},
              {"subcommand", "bootstrap-scan"},
              {"model", "north-east"},
              {"sizes", {8, 12}},
              {"q", {{"from", 0.2}, {"to", 0.5}, {"step", 0.05}}},
              {"samples", 80},
              {"seed", 5},
              {"output", {{"dir", tmp.path.string()}, {"prefix", "scan"}}}};
  RunResult res = run_experiment(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary.contains("q_hat"));
  std::string text = slurp(tmp.path / "scan.csv");
  CHECK(text.find("# seed: 5") != std::string::npos);
  CHECK(text.find("# q_hat: ") != std::string::npos);
  CHECK(text.find("size,q,samples,emptied_fraction,stderr") != std::string::npos);
}

TEST_CASE("hitting and gibbs-gap runs complete") {
  TempDir tmp;
  json hit = {{"schema", 1},      {"subcommand", "hitting"}, {"q", 0.5},
              {"samples", 60},    {"seed", 8},
              {"output", {{"dir", tmp.path.string()}, {"prefix", "hit"}}}};
  CHECK(run_experiment(hit).exit_code == 0);
  std::string text = slurp(tmp.path / "hit.csv");
  CHECK(text.find("q,n,samples,censored,mean_T,stderr,gap,lower_bound") !=
        std::string::npos);

  json gg = {{"schema", 1}, {"subcommand", "gibbs-gap"}, {"L", 2},   {"q", 0.85},
             {"M", 0.1},    {"range", 2},                {"phis", 2}, {"seed", 9},
             {"output", {{"dir", tmp.path.string()}, {"prefix", "gg"}}}};
  RunResult res = run_experiment(gg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary["min_gap"].get<double>() > 1e-6);
}

TEST_CASE("persistence can dump a trajectory in the binary event-log format") {
  TempDir tmp;
  auto dump = (tmp.path / "replica0.trj").string();
  json cfg = {{"schema", 1},
              {"subcommand", "persistence"},
              {"model", "east"},
              {"n", 4},
              {"q", 0.5},
              {"samples", 50},
              {"seed", 12},
              {"t_grid", {{"max", 3.0}, {"points", 4}}},
              {"trajectory_dump", dump},
              {"output", {{"dir", tmp.path.string()}, {"prefix", "p"}}}};
  RunResult res = run_experiment(cfg);
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dump));
  // the file starts with the fixed magic
  std::ifstream in(dump, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "KCSMTRJ1");
}

TEST_CASE("check subcommand reports a pass table") {
  TempDir tmp;
  json cfg = {{"schema", 1},
              {"subcommand", "check"},
              {"output", {{"dir", tmp.path.string()}, {"prefix", "check"}}}};
  RunResult res = run_experiment(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary["failed"] == 0);
  CHECK(res.summary["passed"].get<int>() >= 12);
  CHECK(fs::exists(tmp.path / "check.csv"));
}
