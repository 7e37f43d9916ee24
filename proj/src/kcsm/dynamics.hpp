#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kcsm/models.hpp"

namespace kcsm::dynamics {

using models::ModelSpec;
using models::SiteMeasure;
using topo::Vertex;

/// One clock ring. flags bit 0: the constraint held and the resample was
/// applied. new_state is meaningful only for applied events.
struct Event {
  double time = 0.0;
  std::uint32_t vertex = 0;
  std::uint8_t new_state = 0;
  std::uint8_t flags = 0;

  bool applied() const { return flags & 1; }
};

/// Seeded, replayable record of a single run of the continuous-time dynamics.
struct Trajectory {
  SpinConfig initial;
  SpinConfig final_config;
  std::vector<Event> events;  // every clock ring up to t_max, in time order
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  double t_max = 0.0;

  /// Applies the applied events to the initial config.
  SpinConfig replay() const;

  /// Fixed little-endian binary event log (f64 time, u32 vertex, u8 state,
  /// u8 flags per event).
  void save(const std::string& path) const;
  static Trajectory load(const std::string& path);
};

/// Runs the heat-bath constrained dynamics: every vertex carries an
/// independent rate-1 exponential clock; at a ring, if the constraint holds
/// in the current configuration, the spin is resampled from nu (possibly to
/// the same value). on_event is called after every ring; returning false
/// stops the run early. Bit-exact reproducible for fixed (seed, replica).
void run_dynamics(const ModelSpec& model, SpinConfig& state, double t_max,
                  std::uint64_t seed, std::uint64_t replica,
                  const std::function<bool(const Event&, int old_state)>& on_event);

Trajectory simulate(const ModelSpec& model, const SpinConfig& initial, double t_max,
                    std::uint64_t seed, std::uint64_t replica = 0);

/// i.i.d. per-site sample from nu (0-1 measures).
SpinConfig sample_equilibrium(const SiteMeasure& measure, int n_vertices,
                              std::uint64_t seed, std::uint64_t replica = 0);

struct PersistenceCurve {
  std::vector<double> t;
  std::vector<double> F;    // P(origin value unchanged up to t)
  std::vector<double> F0;   // joint with the origin starting vacant
  std::vector<double> F1;   // joint with the origin starting occupied
  std::vector<double> se;   // binomial standard error of F
  std::uint64_t n_samples = 0;
};

/// Persistence estimate from equilibrium starts. A resample to the same
/// value does not break persistence; only an applied value change does.
PersistenceCurve persistence(const ModelSpec& model, Vertex origin,
                             const std::vector<double>& t_grid, int n_samples,
                             std::uint64_t seed);

struct HittingSample {
  double t = 0.0;
  bool censored = false;
};

struct HittingResult {
  std::vector<HittingSample> samples;
  double t_cap = 0.0;
  std::uint64_t n_censored = 0;
  bool reliable = true;  // false when every sample was censored

  double mean() const;    // censored samples enter at t_cap (downward biased)
  double stderr_() const;
};

/// i.i.d. samples of the hitting time of A, starting from a fixed config or
/// (when start is empty) from equilibrium. Runs are capped at t_cap and
/// censoring is reported, never dropped.
HittingResult hitting_time(const ModelSpec& model,
                           const std::optional<SpinConfig>& start,
                           const std::function<bool(const SpinConfig&)>& in_A,
                           int n_samples, std::uint64_t seed, double t_cap);

/// Default censoring cap heuristic.
double default_t_cap(double q, int n_vertices);

}  // namespace kcsm::dynamics
