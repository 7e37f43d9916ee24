// kcsm command line: declarative experiment runner over the shared library.
// Builds a schema-1 config JSON from a config file and/or flags (flags win)
// and hands it to kcsm_run_experiment through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kcsm/kcsm.h"

using nlohmann::json;

namespace {

json parse_numbers_or_range(const std::string& text, const std::string& what) {
  // accepts "0.5", "0.3,0.5,0.7", "2..10" or "0.2:0.4:0.01"
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    json out;
    out["from"] = std::stod(text.substr(0, dots));
    out["to"] = std::stod(text.substr(dots + 2));
    out["step"] = 1.0;
    return out;
  }
  if (std::count(text.begin(), text.end(), ':') == 2) {
    auto a = text.find(':');
    auto b = text.find(':', a + 1);
    json out;
    out["from"] = std::stod(text.substr(0, a));
    out["to"] = std::stod(text.substr(a + 1, b - a - 1));
    out["step"] = std::stod(text.substr(b + 1));
    return out;
  }
  json list = json::array();
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      list.push_back(std::stod(tok));
    } catch (const std::exception&) {
      std::cerr << "kcsm: cannot parse " << what << " value '" << tok << "'\n";
      std::exit(2);
    }
  }
  return list;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "kcsm: cannot open config file " << path << "\n";
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const std::exception& e) {
    std::cerr << "kcsm: config file is not valid JSON: " << e.what() << "\n";
    std::exit(2);
  }
}

void print_summary(const json& summary) {
  for (auto it = summary.begin(); it != summary.end(); ++it) {
    if (it.key() == "results" && it->is_array()) {
      for (const auto& row : *it)
        std::printf("%-34s %s  %s\n", row.value("name", "?").c_str(),
                    row.value("pass", false) ? "PASS" : "FAIL",
                    row.value("detail", "").c_str());
      continue;
    }
    std::cout << it.key() << " = " << it->dump() << "\n";
  }
}

int run(const json& config) {
  char* summary_text = nullptr;
  int exit_code = 0;
  kcsm_status st = kcsm_run_experiment(config.dump().c_str(), &summary_text, &exit_code);
  if (st != KCSM_OK) {
    std::cerr << "kcsm: " << kcsm_last_error() << "\n";
    return st == KCSM_ERR_SOLVER ? 3 : 2;
  }
  json summary = json::parse(summary_text);
  kcsm_string_free(summary_text);
  if (summary.contains("error")) {
    std::cerr << "kcsm: " << summary["error"].get<std::string>() << "\n";
    return exit_code == 0 ? 2 : exit_code;
  }
  print_summary(summary);
  return exit_code;
}

struct CommonFlags {
  std::string config_file;
  std::string out_dir;
  std::string prefix;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "config file (JSON); flags override");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--prefix", prefix, "output file prefix");
    cmd->add_option("--seed", seed, "RNG seed (required for stochastic runs)");
  }

  json to_json(const std::string& subcommand) const {
    json cfg = config_file.empty() ? json::object() : load_config_file(config_file);
    if (!cfg.contains("schema")) cfg["schema"] = 1;
    cfg["subcommand"] = subcommand;
    if (!out_dir.empty()) cfg["output"]["dir"] = out_dir;
    if (!prefix.empty()) cfg["output"]["prefix"] = prefix;
    if (seed) cfg["seed"] = *seed;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("kcsm ") + kcsm_version() +
               " — kinetically constrained spin model laboratory"};
  app.require_subcommand(1);

  // gap
  auto* gap = app.add_subcommand("gap", "exact spectral gap sweep over n and q");
  CommonFlags gap_common;
  gap_common.attach(gap);
  std::string gap_model = "east", gap_n = "2..10", gap_q = "0.5", gap_boundary;
  gap->add_option("--model", gap_model, "east | fa1f | fa2f | north-east | spiral");
  gap->add_option("--n", gap_n, "sizes, e.g. 2..10 or 4,8");
  gap->add_option("--q", gap_q, "vacancy probabilities, e.g. 0.5 or 0.3,0.5");
  gap->add_option("--boundary", gap_boundary, "none | minimal | maximal");

  // persistence
  auto* pers = app.add_subcommand("persistence", "persistence function estimate");
  CommonFlags pers_common;
  pers_common.attach(pers);
  std::string pers_model = "east", pers_q = "0.5";
  int pers_n = 8, pers_samples = 10000, pers_points = 20, pers_origin = 0;
  double pers_tmax = 10.0;
  pers->add_option("--model", pers_model, "catalog model name");
  pers->add_option("--n", pers_n, "volume size");
  pers->add_option("--q", pers_q, "vacancy probabilities");
  pers->add_option("--samples", pers_samples, "trajectories per q");
  pers->add_option("--t-max", pers_tmax, "largest grid time");
  pers->add_option("--t-points", pers_points, "grid points");
  pers->add_option("--origin", pers_origin, "origin vertex");

  // bootstrap-scan
  auto* scan = app.add_subcommand("bootstrap-scan",
                                  "bootstrap emptying frequencies and threshold");
  CommonFlags scan_common;
  scan_common.attach(scan);
  std::string scan_model = "north-east", scan_sizes = "16,32,64",
              scan_q = "0.2:0.4:0.01";
  int scan_samples = 400;
  scan->add_option("--model", scan_model, "north-east | fa1f | fa2f");
  scan->add_option("--sizes", scan_sizes, "linear sizes, e.g. 16,32,64");
  scan->add_option("--q", scan_q, "q grid, e.g. 0.2:0.4:0.01");
  scan->add_option("--samples", scan_samples, "samples per (size, q)");

  // hitting
  auto* hit = app.add_subcommand("hitting",
                                 "hitting time of a vacant origin on the East chain");
  CommonFlags hit_common;
  hit_common.attach(hit);
  std::string hit_q = "0.3,0.5";
  int hit_samples = 1000;
  double hit_tcap = 0.0;
  hit->add_option("--q", hit_q, "vacancy probabilities");
  hit->add_option("--samples", hit_samples, "samples per q");
  hit->add_option("--t-cap", hit_tcap, "censoring cap (default heuristic)");

  // gibbs-gap
  auto* gg = app.add_subcommand("gibbs-gap",
                                "interacting North-East gaps over random potentials");
  CommonFlags gg_common;
  gg_common.attach(gg);
  int gg_L = 3, gg_phis = 10, gg_range = 2;
  double gg_q = 0.9, gg_M = 0.1;
  std::string gg_file;
  gg->add_option("--L", gg_L, "square side");
  gg->add_option("--q", gg_q, "vacancy probability");
  gg->add_option("--M", gg_M, "interaction norm");
  gg->add_option("--range", gg_range, "interaction range");
  gg->add_option("--phis", gg_phis, "number of random interactions");
  gg->add_option("--interaction-file", gg_file, "load one interaction from file");

  // check
  auto* check = app.add_subcommand("check", "run the inequality test suite");
  CommonFlags check_common;
  check_common.attach(check);

  CLI11_PARSE(app, argc, argv);

  if (gap->parsed()) {
    json cfg = gap_common.to_json("gap");
    if (!gap->get_option("--model")->empty() || !cfg.contains("model"))
      cfg["model"] = gap_model;
    if (!gap->get_option("--n")->empty() || !cfg.contains("n"))
      cfg["n"] = parse_numbers_or_range(gap_n, "n");
    if (!gap->get_option("--q")->empty() || !cfg.contains("q"))
      cfg["q"] = parse_numbers_or_range(gap_q, "q");
    if (!gap_boundary.empty()) cfg["boundary"] = gap_boundary;
    return run(cfg);
  }
  if (pers->parsed()) {
    json cfg = pers_common.to_json("persistence");
    cfg["model"] = pers_model;
    cfg["n"] = pers_n;
    cfg["q"] = parse_numbers_or_range(pers_q, "q");
    cfg["samples"] = pers_samples;
    cfg["origin"] = pers_origin;
    cfg["t_grid"] = {{"max", pers_tmax}, {"points", pers_points}};
    return run(cfg);
  }
  if (scan->parsed()) {
    json cfg = scan_common.to_json("bootstrap-scan");
    cfg["model"] = scan_model;
    cfg["sizes"] = parse_numbers_or_range(scan_sizes, "sizes");
    cfg["q"] = parse_numbers_or_range(scan_q, "q");
    cfg["samples"] = scan_samples;
    return run(cfg);
  }
  if (hit->parsed()) {
    json cfg = hit_common.to_json("hitting");
    cfg["q"] = parse_numbers_or_range(hit_q, "q");
    cfg["samples"] = hit_samples;
    if (hit_tcap > 0) cfg["t_cap"] = hit_tcap;
    return run(cfg);
  }
  if (gg->parsed()) {
    json cfg = gg_common.to_json("gibbs-gap");
    cfg["L"] = gg_L;
    cfg["q"] = gg_q;
    cfg["M"] = gg_M;
    cfg["range"] = gg_range;
    cfg["phis"] = gg_phis;
    if (!gg_file.empty()) cfg["interaction_file"] = gg_file;
    return run(cfg);
  }
  if (check->parsed()) {
    json cfg = check_common.to_json("check");
    return run(cfg);
  }
  return 2;
}
