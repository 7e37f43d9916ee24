#include "kcsm/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kcsm/bootstrap.hpp"
#include "kcsm/checks.hpp"
#include "kcsm/dynamics.hpp"
#include "kcsm/gibbs.hpp"
#include "kcsm/models.hpp"
#include "kcsm/spectra.hpp"

namespace kcsm::expt {

using models::BoundaryMode;
using models::ModelSpec;
using nlohmann::json;
using topo::Coord;
using topo::Rectangle;

namespace {

// ---- config plumbing ----

std::string canonical(const json& config) { return config.dump(); }

std::string hash_hex(const json& config) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical(config))));
  return buf;
}

std::vector<double> number_list(const json& j, const std::string& what) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else if (j.is_object()) {
    double from = j.at("from").get<double>();
    double to = j.at("to").get<double>();
    double step = j.at("step").get<double>();
    require(step > 0.0 && to >= from, ErrorCode::InvalidArgument,
            what + " grid needs step > 0 and to >= from");
    for (int k = 0;; ++k) {
      double v = from + k * step;
      if (v > to + 1e-12) break;
      out.push_back(std::min(v, to));
    }
  } else {
    fail(ErrorCode::InvalidArgument, what + " must be a number, list or {from,to,step}");
  }
  require(!out.empty(), ErrorCode::InvalidArgument, what + " is empty");
  return out;
}

std::vector<int> int_list(const json& j, const std::string& what) {
  std::vector<int> out;
  for (double v : number_list(j, what)) out.push_back(static_cast<int>(std::llround(v)));
  return out;
}

std::uint64_t required_seed(const json& config) {
  require(config.contains("seed"), ErrorCode::InvalidArgument,
          "stochastic subcommands require an explicit seed");
  return config.at("seed").get<std::uint64_t>();
}

struct OutputSpec {
  std::filesystem::path dir;
  std::string prefix;
};

OutputSpec output_spec(const json& config, const std::string& subcommand) {
  OutputSpec out;
  out.dir = ".";
  out.prefix = subcommand;
  if (config.contains("output")) {
    const json& o = config.at("output");
    if (o.contains("dir")) out.dir = o.at("dir").get<std::string>();
    if (o.contains("prefix")) out.prefix = o.at("prefix").get<std::string>();
  }
  std::filesystem::create_directories(out.dir);
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const json& config,
            const std::vector<std::string>& extra_comments,
            const std::vector<std::string>& columns)
      : path_(path.string()), out_(path) {
    require(static_cast<bool>(out_), ErrorCode::Io, "cannot open " + path_);
    out_ << "# kcsm-version: " << kVersion << "\n";
    out_ << "# config-hash: " << hash_hex(config) << "\n";
    out_ << "# config: " << canonical(config) << "\n";
    for (const auto& c : extra_comments) out_ << "# " << c << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  const std::string& path() const { return path_; }

  void close() {
    out_.close();
    require(static_cast<bool>(out_) || out_.eof(), ErrorCode::Io,
            "write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string num(double v) { return fmt_double(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

void write_manifest(const OutputSpec& out, const json& config, const json& summary,
                    RunResult& result) {
  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = config;
  manifest["config_hash"] = hash_hex(config);
  manifest["summary"] = summary;
  manifest["files"] = result.files_written;
  auto path = out.dir / (out.prefix + ".manifest.json");
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::Io, "cannot open " + path.string());
  f << manifest.dump(2) << "\n";
  result.files_written.push_back(path.string());
}

// ---- model sweeps ----

BoundaryMode boundary_of(const json& config, BoundaryMode fallback) {
  if (!config.contains("boundary")) return fallback;
  std::string s = config.at("boundary").get<std::string>();
  if (s == "none") return BoundaryMode::None;
  if (s == "maximal") return BoundaryMode::Maximal;
  if (s == "minimal") return BoundaryMode::MinimalCatalog;
  fail(ErrorCode::InvalidArgument, "unknown boundary mode: " + s);
}

ModelSpec sweep_model(const std::string& name, int n, double q, BoundaryMode bm) {
  if (name == "east") return models::east_chain(n, q, bm);
  if (name == "fa1f")
    return models::fa_jf_rectangle(Rectangle{Coord{0}, Coord{n - 1}}, 1, q, bm);
  if (name == "fa2f")
    return models::fa_jf_rectangle(Rectangle{Coord{0, 0}, Coord{n - 1, n - 1}}, 2, q, bm);
  if (name == "north-east")
    return models::north_east_rectangle(Rectangle{Coord{0, 0}, Coord{n - 1, n - 1}}, q, bm);
  if (name == "spiral")
    return models::spiral_rectangle(Rectangle{Coord{0, 0}, Coord{n - 1, n - 1}}, q, bm);
  fail(ErrorCode::InvalidArgument,
       "unknown sweep model '" + name + "' (east, fa1f, fa2f, north-east, spiral)");
}

ModelSpec model_for(const json& config, int n, double q) {
  if (config.contains("descriptor")) {
    json d = config.at("descriptor");
    d["q"] = q;
    return models::model_from_json(d.dump());
  }
  std::string name = config.value("model", "east");
  return sweep_model(name, n, q, boundary_of(config, BoundaryMode::MinimalCatalog));
}

spectra::SolverOptions solver_options(const json& config) {
  spectra::SolverOptions opts;
  if (config.contains("solver")) {
    const json& s = config.at("solver");
    opts.tol = s.value("tol", opts.tol);
    opts.dense_fallback_dim = s.value("dense_fallback", opts.dense_fallback_dim);
  }
  return opts;
}

// ---- subcommands ----

RunResult run_gap(const json& config) {
  auto out = output_spec(config, "gap");
  auto ns = int_list(config.at("n"), "n");
  auto qs = number_list(config.at("q"), "q");
  auto opts = solver_options(config);

  RunResult result;
  CsvWriter csv(out.dir / (out.prefix + ".csv"), config, {},
                {"model", "n", "q", "states", "components", "gap", "residual"});
  std::string name = config.value("model", "east");
  int rows = 0;
  for (int n : ns) {
    for (double q : qs) {
      ModelSpec model = model_for(config, n, q);
      spectra::Generator gen = spectra::build_generator(model);
      spectra::SpectralReport rep = spectra::analyze(gen, opts);
      if (!rep.converged)
        fail(ErrorCode::SolverFailure, "eigensolver did not converge for n=" +
                                           std::to_string(n) + " q=" + num(q));
      csv.row({model.name(), num(n), num(q), num(gen.dim()),
               num(rep.zero_multiplicity), num(rep.gap), num(rep.residual)});
      ++rows;
    }
  }
  csv.close();
  result.files_written.push_back(csv.path());
  result.summary["rows"] = rows;
  result.summary["model"] = name;
  write_manifest(out, config, result.summary, result);
  return result;
}

RunResult run_persistence(const json& config) {
  auto out = output_spec(config, "persistence");
  std::uint64_t seed = required_seed(config);
  int n = config.value("n", 8);
  auto qs = number_list(config.value("q", json(0.5)), "q");
  int samples = config.value("samples", 10000);
  int origin = config.value("origin", 0);
  auto opts = solver_options(config);

  std::vector<double> t_grid;
  if (config.contains("t_grid") && config.at("t_grid").is_array()) {
    t_grid = number_list(config.at("t_grid"), "t_grid");
  } else {
    double t_max = 10.0;
    int points = 20;
    if (config.contains("t_grid")) {
      t_max = config.at("t_grid").value("max", t_max);
      points = config.at("t_grid").value("points", points);
    }
    for (int k = 0; k <= points; ++k) t_grid.push_back(t_max * k / points);
  }

  RunResult result;
  CsvWriter csv(out.dir / (out.prefix + ".csv"), config,
                {"seed: " + std::to_string(seed)},
                {"q", "t", "F_hat", "F0_hat", "F1_hat", "stderr", "n", "bound"});
  double worst_margin = -1e300;
  for (double q : qs) {
    ModelSpec model = model_for(config, n, q);
    spectra::Generator gen = spectra::build_generator(model);
    spectra::SpectralReport rep = spectra::analyze(gen, opts);
    if (!rep.converged) fail(ErrorCode::SolverFailure, "gap solve failed");
    double gap = rep.gap;
    auto curve = dynamics::persistence(model, origin, t_grid, samples,
                                       rng::derive_key(seed, fnv1a64("q"),
                                                       static_cast<std::uint64_t>(1e6 * q)));
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      double bound = std::exp(-q * gap * t_grid[k]) + std::exp(-(1 - q) * gap * t_grid[k]);
      csv.row({num(q), num(t_grid[k]), num(curve.F[k]), num(curve.F0[k]),
               num(curve.F1[k]), num(curve.se[k]), num(curve.n_samples), num(bound)});
      worst_margin = std::max(worst_margin, curve.F[k] - bound);
    }
    if (config.contains("trajectory_dump")) {
      SpinConfig init = dynamics::sample_equilibrium(model.measure(), n, seed, 0);
      dynamics::Trajectory tr = dynamics::simulate(model, init, t_grid.back(), seed, 0);
      std::string path = config.at("trajectory_dump").get<std::string>();
      tr.save(path);
      result.files_written.push_back(path);
    }
  }
  csv.close();
  result.files_written.insert(result.files_written.begin(), csv.path());
  result.summary["max_F_minus_bound"] = worst_margin;
  write_manifest(out, config, result.summary, result);
  return result;
}

bootstrap::ModelFamily scan_family(const std::string& name) {
  if (name == "north-east")
    return {"north-east", [](int L) { return models::north_east_torus(L, 0.5); }};
  if (name == "fa1f")
    return {"fa1f", [](int L) {
              return models::fa_jf_rectangle(Rectangle{Coord{0}, Coord{L - 1}}, 1, 0.5,
                                             BoundaryMode::None);
            }};
  if (name == "fa2f")
    return {"fa2f", [](int L) {
              return models::fa_jf_rectangle(Rectangle{Coord{0, 0}, Coord{L - 1, L - 1}},
                                             2, 0.5, BoundaryMode::None);
            }};
  fail(ErrorCode::InvalidArgument,
       "unknown scan family '" + name + "' (north-east, fa1f, fa2f)");
}

RunResult run_bootstrap_scan(const json& config) {
  auto out = output_spec(config, "bootstrap-scan");
  std::uint64_t seed = required_seed(config);
  std::string name = config.value("model", "north-east");
  auto sizes = int_list(config.value("sizes", json::array({16, 32, 64})), "sizes");
  auto qs = number_list(
      config.value("q", json{{"from", 0.20}, {"to", 0.40}, {"step", 0.01}}), "q");
  int samples = config.value("samples", 400);

  auto est = bootstrap::estimate_qbp(scan_family(name), sizes, qs, samples, seed);

  RunResult result;
  CsvWriter csv(out.dir / (out.prefix + ".csv"), config,
                {"seed: " + std::to_string(seed),
                 "q_hat: " + num(est.q_hat),
                 "q_hat_interval: [" + num(est.lo) + "," + num(est.hi) + "]"},
                {"size", "q", "samples", "emptied_fraction", "stderr"});
  for (const auto& r : est.rows)
    csv.row({num(r.size), num(r.q), num(r.samples), num(r.emptied_fraction),
             num(r.stderr_)});
  csv.close();
  result.files_written.push_back(csv.path());
  result.summary["q_hat"] = est.q_hat;
  result.summary["q_hat_lo"] = est.lo;
  result.summary["q_hat_hi"] = est.hi;
  result.summary["bracketed"] = est.bracketed;
  write_manifest(out, config, result.summary, result);
  return result;
}

RunResult run_hitting(const json& config) {
  auto out = output_spec(config, "hitting");
  std::uint64_t seed = required_seed(config);
  auto qs = number_list(config.value("q", json::array({0.3, 0.5})), "q");
  int samples = config.value("samples", 1000);
  auto opts = solver_options(config);

  RunResult result;
  CsvWriter csv(out.dir / (out.prefix + ".csv"), config,
                {"seed: " + std::to_string(seed)},
                {"q", "n", "samples", "censored", "mean_T", "stderr", "gap",
                 "lower_bound"});
  for (double q : qs) {
    // the interval [0 .. ceil(1/q)] with the rightmost site unconstrained
    int n = static_cast<int>(std::ceil(1.0 / q)) + 1;
    ModelSpec model = models::east_chain(n, q);
    spectra::Generator gen = spectra::build_generator(model);
    spectra::SpectralReport rep = spectra::analyze(gen, opts);
    if (!rep.converged) fail(ErrorCode::SolverFailure, "gap solve failed");
    double t_cap = config.value("t_cap", dynamics::default_t_cap(q, n));
    SpinConfig ones(n, 1);
    auto hit = dynamics::hitting_time(
        model, ones, [](const SpinConfig& c) { return c.get(0) == 0; }, samples,
        rng::derive_key(seed, fnv1a64("hit"), static_cast<std::uint64_t>(1e6 * q)),
        t_cap);
    double bound = std::exp(-1.0) / rep.gap;
    csv.row({num(q), num(n), num(static_cast<int>(hit.samples.size())),
             num(static_cast<std::uint64_t>(hit.n_censored)), num(hit.mean()),
             num(hit.stderr_()), num(rep.gap), num(bound)});
  }
  csv.close();
  result.files_written.push_back(csv.path());
  result.summary["rows"] = qs.size();
  write_manifest(out, config, result.summary, result);
  return result;
}

RunResult run_gibbs_gap(const json& config) {
  auto out = output_spec(config, "gibbs-gap");
  std::uint64_t seed = required_seed(config);
  int L = config.value("L", 3);
  double q = config.value("q", 0.9);
  double M = config.value("M", 0.1);
  int range = config.value("range", 2);
  int n_phis = config.value("phis", 10);
  auto opts = solver_options(config);

  Rectangle box{Coord{0, 0}, Coord{L - 1, L - 1}};
  ModelSpec model = models::north_east_rectangle(box, q, BoundaryMode::Maximal);
  gibbs::BoundaryConfig tau = gibbs::zero_boundary(model.graph(), range);

  RunResult result;
  CsvWriter csv(out.dir / (out.prefix + ".csv"), config,
                {"seed: " + std::to_string(seed)},
                {"phi", "norm", "gap", "residual"});
  double min_gap = 1e300;
  auto run_one = [&](int index, const gibbs::Interaction& phi) {
    spectra::Generator gen = gibbs::build_interacting_generator(model, phi, tau);
    auto comps = spectra::ergodic_components(gen);
    require(comps.size() == 1, ErrorCode::InvalidArgument,
            "interacting chain is reducible; use a maximal boundary");
    auto rep = spectra::spectral_gap(gen, comps[0], opts);
    if (!rep.converged) fail(ErrorCode::SolverFailure, "gap solve failed");
    csv.row({num(index), num(phi.computed_norm()), num(rep.gap), num(rep.residual)});
    min_gap = std::min(min_gap, rep.gap);
  };
  if (config.contains("interaction_file")) {
    auto phi = gibbs::Interaction::load(config.at("interaction_file").get<std::string>());
    run_one(0, phi);
  } else {
    for (int k = 0; k < n_phis; ++k)
      run_one(k, gibbs::random_interaction(box, range, M,
                                           rng::derive_key(seed, fnv1a64("phi"),
                                                           static_cast<std::uint64_t>(k))));
  }
  csv.close();
  result.files_written.push_back(csv.path());
  result.summary["min_gap"] = min_gap;
  write_manifest(out, config, result.summary, result);
  return result;
}

RunResult run_check(const json& config) {
  auto out = output_spec(config, "check");
  auto results = checks::run_all(config.value("seed", 20240901ull));
  RunResult result;
  CsvWriter csv(out.dir / (out.prefix + ".csv"), config, {}, {"check", "pass", "detail"});
  int failed = 0;
  for (const auto& r : results) {
    csv.row({r.name, r.pass ? "1" : "0", "\"" + r.detail + "\""});
    if (!r.pass) ++failed;
  }
  csv.close();
  result.files_written.push_back(csv.path());
  result.summary["passed"] = static_cast<int>(results.size()) - failed;
  result.summary["failed"] = failed;
  json table = json::array();
  for (const auto& r : results)
    table.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
  result.summary["results"] = table;
  result.exit_code = failed == 0 ? kOk : kCheckFailed;
  write_manifest(out, config, result.summary, result);
  return result;
}

}  // namespace

json merge_config(const json& base, const json& overrides) {
  if (!base.is_object() || !overrides.is_object()) return overrides;
  json out = base;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (out.contains(it.key()))
      out[it.key()] = merge_config(out[it.key()], it.value());
    else
      out[it.key()] = it.value();
  }
  return out;
}

RunResult run_experiment(const json& config) {
  require(config.is_object(), ErrorCode::InvalidArgument, "config must be an object");
  require(config.value("schema", 0) == 1, ErrorCode::InvalidArgument,
          "config schema must be 1");
  std::string sub = config.value("subcommand", "");
  if (sub == "gap") return run_gap(config);
  if (sub == "persistence") return run_persistence(config);
  if (sub == "bootstrap-scan") return run_bootstrap_scan(config);
  if (sub == "hitting") return run_hitting(config);
  if (sub == "gibbs-gap") return run_gibbs_gap(config);
  if (sub == "check") return run_check(config);
  fail(ErrorCode::InvalidArgument, "unknown subcommand: '" + sub + "'");
}

RunResult run_to_result(const std::string& config_text) {
  RunResult result;
  try {
    json config = json::parse(config_text);
    result = run_experiment(config);
    result.summary["files"] = result.files_written;
    result.summary["exit_code"] = result.exit_code;
  } catch (const Error& e) {
    result.exit_code =
        e.code() == ErrorCode::SolverFailure ? kSolverError : kValidationError;
    result.summary["error"] = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kValidationError;
    result.summary["error"] = e.what();
  }
  return result;
}

}  // namespace kcsm::expt
