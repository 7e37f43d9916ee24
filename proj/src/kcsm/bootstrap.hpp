#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kcsm/models.hpp"

namespace kcsm::bootstrap {

using models::ModelSpec;
using topo::Graph;
using topo::Rectangle;
using topo::Vertex;

/// One synchronous application of the bootstrap map: a site becomes vacant
/// if it already is vacant or its constraint holds in the input config.
SpinConfig bootstrap_step(const ModelSpec& model, const SpinConfig& config);

/// Least fixed point of the bootstrap map above config (work-queue driven;
/// only dependents of newly emptied sites are re-tested).
SpinConfig closure(const ModelSpec& model, const SpinConfig& config);

/// True iff the closure of (config inside region, all-ones outside) empties
/// the whole region, with moves allowed only inside the region.
bool internally_spanned(const ModelSpec& model, const std::vector<Vertex>& region,
                        const SpinConfig& config);

enum class CrossingDirection { TopBottom, LeftRight };

/// Extremal vacant crossing of a rectangle: rightmost for top-bottom,
/// lowermost for left-right. Path vertices are consecutive lattice neighbors.
struct Crossing {
  std::vector<Vertex> path;
  CrossingDirection direction = CrossingDirection::TopBottom;
};

/// Finds the extremal vacant crossing of rect (a sub-box of the lattice graph
/// g) in the given config, if one exists.
std::optional<Crossing> find_crossing(const Graph& g, const SpinConfig& config,
                                      const Rectangle& rect, CrossingDirection dir);

bool has_crossing(const Graph& g, const SpinConfig& config, const Rectangle& rect,
                  CrossingDirection dir);

/// A family of models indexed by linear size, e.g. the North-East model on
/// an L x L torus.
struct ModelFamily {
  std::string name;
  std::function<ModelSpec(int size)> build;
};

struct ScanRow {
  int size = 0;
  double q = 0.0;
  int samples = 0;
  double emptied_fraction = 0.0;
  double stderr_ = 0.0;
};

struct ThresholdEstimate {
  double q_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool bracketed = false;
  std::vector<ScanRow> rows;
  std::uint64_t seed = 0;
};

/// Emptying-frequency scan over (size, q). Samples are coupled in q through
/// shared per-site uniforms, so frequencies are nondecreasing in q sample by
/// sample. The threshold estimate interpolates the 1/2 crossing of the
/// largest size; the interval propagates the binomial error through the
/// local slope.
ThresholdEstimate estimate_qbp(const ModelFamily& family,
                               const std::vector<int>& sizes,
                               const std::vector<double>& q_grid, int samples,
                               std::uint64_t seed);

/// Fills a 0-1 config from per-site uniforms: site x is vacant iff u_x < q.
/// Shared by the scan and by the oriented-percolation oracle in the tests.
SpinConfig bernoulli_vacant_config(int n, double q, std::uint64_t seed,
                                   std::uint64_t replica,
                                   rng::Purpose purpose = rng::Purpose::Scan);

}  // namespace kcsm::bootstrap
