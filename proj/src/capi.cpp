#include "kcsm/kcsm.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "kcsm/bootstrap.hpp"
#include "kcsm/dynamics.hpp"
#include "kcsm/experiments.hpp"
#include "kcsm/models.hpp"
#include "kcsm/spectra.hpp"

using kcsm::Error;
using kcsm::ErrorCode;

struct kcsm_model {
  kcsm::models::ModelSpec spec;
};

namespace {

thread_local std::string g_last_error;

kcsm_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return KCSM_ERR_INVALID;
    case ErrorCode::UnsupportedTopology: return KCSM_ERR_UNSUPPORTED;
    case ErrorCode::CapExceeded: return KCSM_ERR_CAP;
    case ErrorCode::SolverFailure: return KCSM_ERR_SOLVER;
    case ErrorCode::Io: return KCSM_ERR_IO;
  }
  return KCSM_ERR_INTERNAL;
}

template <typename Fn>
kcsm_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return KCSM_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KCSM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return KCSM_ERR_INTERNAL;
  }
}

kcsm::SpinConfig config_from_bytes(const kcsm_model* model, const uint8_t* spins,
                                   int n) {
  kcsm::require(model != nullptr && spins != nullptr, ErrorCode::InvalidArgument,
                "null argument");
  kcsm::require(n == model->spec.num_vertices(), ErrorCode::InvalidArgument,
                "config length does not match the model");
  kcsm::SpinConfig cfg(n);
  for (int x = 0; x < n; ++x) {
    kcsm::require(spins[x] <= 1, ErrorCode::InvalidArgument,
                  "spins must be 0 or 1");
    cfg.set(x, spins[x]);
  }
  return cfg;
}

void config_to_bytes(const kcsm::SpinConfig& cfg, uint8_t* spins) {
  for (int x = 0; x < cfg.size(); ++x) spins[x] = static_cast<uint8_t>(cfg.get(x));
}

}  // namespace

extern "C" {

const char* kcsm_version(void) { return kcsm::expt::kVersion; }

const char* kcsm_last_error(void) { return g_last_error.c_str(); }

kcsm_status kcsm_model_create(const char* json_descriptor, kcsm_model** out) {
  return guarded([&] {
    kcsm::require(json_descriptor != nullptr && out != nullptr,
                  ErrorCode::InvalidArgument, "null argument");
    *out = new kcsm_model{kcsm::models::model_from_json(json_descriptor)};
  });
}

void kcsm_model_free(kcsm_model* model) { delete model; }

int kcsm_model_num_vertices(const kcsm_model* model) {
  return model ? model->spec.num_vertices() : 0;
}

kcsm_status kcsm_constraint(const kcsm_model* model, const uint8_t* spins, int n,
                            int vertex, int* out) {
  return guarded([&] {
    kcsm::require(out != nullptr, ErrorCode::InvalidArgument, "null output");
    auto cfg = config_from_bytes(model, spins, n);
    kcsm::require(vertex >= 0 && vertex < n, ErrorCode::InvalidArgument,
                  "vertex out of range");
    *out = model->spec.constraint(cfg, vertex);
  });
}

kcsm_status kcsm_bootstrap_step(const kcsm_model* model, uint8_t* spins, int n) {
  return guarded([&] {
    auto cfg = config_from_bytes(model, spins, n);
    config_to_bytes(kcsm::bootstrap::bootstrap_step(model->spec, cfg), spins);
  });
}

kcsm_status kcsm_bootstrap_closure(const kcsm_model* model, uint8_t* spins, int n,
                                   int* all_zero) {
  return guarded([&] {
    auto cfg = config_from_bytes(model, spins, n);
    auto fixed = kcsm::bootstrap::closure(model->spec, cfg);
    config_to_bytes(fixed, spins);
    if (all_zero) *all_zero = fixed.all_zero() ? 1 : 0;
  });
}

kcsm_status kcsm_spectral_gap(const kcsm_model* model, kcsm_spectral_report* out) {
  return guarded([&] {
    kcsm::require(model != nullptr && out != nullptr, ErrorCode::InvalidArgument,
                  "null argument");
    auto gen = kcsm::spectra::build_generator(model->spec);
    auto rep = kcsm::spectra::analyze(gen);
    kcsm::require(rep.converged, ErrorCode::SolverFailure,
                  "eigensolver did not converge");
    out->gap = rep.gap;
    out->relaxation_time = rep.relaxation_time;
    out->residual = rep.residual;
    out->dim = static_cast<long long>(rep.dim);
    out->components = rep.zero_multiplicity;
    out->converged = rep.converged ? 1 : 0;
  });
}

kcsm_status kcsm_dirichlet_eigenvalue(const kcsm_model* model, int vertex,
                                      double* out) {
  return guarded([&] {
    kcsm::require(model != nullptr && out != nullptr, ErrorCode::InvalidArgument,
                  "null argument");
    kcsm::require(model->spec.is_binary(), ErrorCode::UnsupportedTopology,
                  "Dirichlet eigenvalues are exposed for 0-1 models");
    kcsm::require(vertex >= 0 && vertex < model->spec.num_vertices(),
                  ErrorCode::InvalidArgument, "vertex out of range");
    auto gen = kcsm::spectra::build_generator(model->spec);
    *out = kcsm::spectra::dirichlet_eigenvalue(gen, [&](std::uint64_t i) {
      return ((i >> vertex) & 1ull) == 0;  // vertex vacant
    });
  });
}

kcsm_status kcsm_persistence(const kcsm_model* model, int origin,
                             const double* t_grid, int len, int samples,
                             uint64_t seed, double* F, double* F0, double* F1,
                             double* se) {
  return guarded([&] {
    kcsm::require(model != nullptr && t_grid != nullptr && len > 0,
                  ErrorCode::InvalidArgument, "null argument");
    std::vector<double> grid(t_grid, t_grid + len);
    auto curve = kcsm::dynamics::persistence(model->spec, origin, grid, samples, seed);
    for (int k = 0; k < len; ++k) {
      if (F) F[k] = curve.F[static_cast<std::size_t>(k)];
      if (F0) F0[k] = curve.F0[static_cast<std::size_t>(k)];
      if (F1) F1[k] = curve.F1[static_cast<std::size_t>(k)];
      if (se) se[k] = curve.se[static_cast<std::size_t>(k)];
    }
  });
}

kcsm_status kcsm_run_experiment(const char* config_json, char** summary_json,
                                int* exit_code) {
  return guarded([&] {
    kcsm::require(config_json != nullptr, ErrorCode::InvalidArgument,
                  "null config");
    auto result = kcsm::expt::run_to_result(config_json);
    if (exit_code) *exit_code = result.exit_code;
    if (summary_json) {
      std::string s = result.summary.dump();
      *summary_json = static_cast<char*>(std::malloc(s.size() + 1));
      kcsm::require(*summary_json != nullptr, ErrorCode::InvalidArgument,
                    "allocation failed");
      std::memcpy(*summary_json, s.c_str(), s.size() + 1);
    }
  });
}

void kcsm_string_free(char* s) { std::free(s); }

}  // extern "C"
