#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcsm/spin_config.hpp"
#include "kcsm/topology.hpp"

namespace kcsm::models {

using topo::Coord;
using topo::Graph;
using topo::Rectangle;
using topo::RootedTree;
using topo::Vertex;

/// Single-site probability space (S, nu) with a distinguished good set G.
/// For 0-1 models: states {0,1}, G = {0}, q = nu(0).
struct SiteMeasure {
  std::vector<double> probs;     // per state 0..k-1, sums to 1
  std::vector<std::uint8_t> good;  // membership flags per state

  static SiteMeasure binary(double q);

  int num_states() const { return static_cast<int>(probs.size()); }
  bool is_binary() const;
  double q() const;  // probability of the good set
  double p() const { return 1.0 - q(); }
  bool operator==(const SiteMeasure& o) const { return probs == o.probs && good == o.good; }

  // Strict validation for dynamics/spectra: every state has positive mass.
  void validate_strict() const;
  // Relaxed validation for pure sampling (allows q in {0,1}).
  void validate() const;
};

/// Site ids: 0..n-1 are graph vertices, n+k is exterior boundary slot k.
using Site = std::int32_t;

struct InfluenceSet {
  std::vector<Site> sites;  // sorted, unique
};

/// Per-vertex constraint. FA-jf is kept in threshold form ("at least j good
/// among these sites") instead of materializing all (deg choose j) subsets.
struct VertexConstraint {
  enum class Kind { Always, Sets, Threshold };
  Kind kind = Kind::Sets;
  std::vector<InfluenceSet> sets;      // Kind::Sets
  std::vector<Site> threshold_sites;   // Kind::Threshold
  int threshold_j = 0;                 // Kind::Threshold
};

enum class BoundaryMode { None, GoodSet, Maximal, MinimalCatalog };

std::string boundary_mode_name(BoundaryMode m);

/// A complete model: graph + influence classes + single-site measure +
/// boundary specification. Immutable after construction; constraint
/// evaluation is pure and reentrant.
class ModelSpec {
 public:
  ModelSpec() = default;
  ModelSpec(Graph graph, SiteMeasure measure,
            std::vector<VertexConstraint> constraints,
            std::vector<Coord> boundary_coords,
            std::vector<std::uint8_t> boundary_good, std::string name,
            std::string params_json = "{}");

  const Graph& graph() const { return graph_; }
  const SiteMeasure& measure() const { return measure_; }
  int num_vertices() const { return graph_.num_vertices(); }
  const std::string& name() const { return name_; }
  const std::string& params_json() const { return params_json_; }
  bool is_binary() const { return measure_.is_binary(); }

  // raw constraint data (boundary slots included)
  const std::vector<VertexConstraint>& raw_constraints() const { return raw_; }
  const std::vector<Coord>& boundary_coords() const { return boundary_coords_; }
  const std::vector<std::uint8_t>& boundary_good() const { return boundary_good_; }
  int num_boundary_slots() const { return static_cast<int>(boundary_good_.size()); }

  /// Hp2 range: max over x and A in C_x of d(x, A).
  int range() const { return range_; }

  /// Constraint indicator c_x(config) for bit-packed 0-1 configs.
  int constraint(const SpinConfig& config, Vertex x) const;

  /// Constraint indicator for general finite state spaces.
  int constraint(const GeneralConfig& config, Vertex x) const;

  /// Reference evaluation straight from the raw influence classes with an
  /// explicit good-indicator per boundary slot (test hook for the
  /// "depends on tau only through the indicators" property).
  int constraint_raw(const SpinConfig& config, Vertex x,
                     const std::vector<std::uint8_t>& boundary_is_good) const;

  bool effectively_unconstrained(Vertex x) const;
  /// true when no configuration can satisfy the constraint at x
  bool effectively_blocked(Vertex x) const;

  /// Interior vertices whose value the effective constraint at x may read.
  std::vector<Vertex> support_of_constraint(Vertex x) const;
  /// Inverse map: constraints that may change when y changes.
  const std::vector<Vertex>& dependents(Vertex y) const;

 private:
  void compile();
  void compute_range();

  struct CompiledSet {
    std::vector<Vertex> members;  // interior only
    std::vector<std::pair<std::uint32_t, std::uint64_t>> masks;
  };
  struct Compiled {
    bool always = false;
    std::vector<CompiledSet> sets;          // satisfied iff every member good
    std::vector<Vertex> threshold_members;  // interior sites of threshold form
    int threshold_need = 0;  // residual j after good boundary slots; <=0 => always
    bool is_threshold = false;
  };

  Graph graph_;
  SiteMeasure measure_;
  std::vector<VertexConstraint> raw_;
  std::vector<Coord> boundary_coords_;
  std::vector<std::uint8_t> boundary_good_;
  std::string name_;
  std::string params_json_;
  std::vector<Compiled> compiled_;
  std::vector<std::vector<Vertex>> dependents_;
  int range_ = 0;
};

// ---- catalog ----

ModelSpec east_chain(int n, double q, BoundaryMode bm = BoundaryMode::MinimalCatalog);
ModelSpec fa_jf_rectangle(const Rectangle& box, int j, double q,
                          BoundaryMode bm = BoundaryMode::MinimalCatalog);
ModelSpec fa_jf_graph(const Graph& g, int j, double q,
                      std::optional<Vertex> unconstrained_root = std::nullopt);
ModelSpec north_east_rectangle(const Rectangle& box, double q,
                               BoundaryMode bm = BoundaryMode::MinimalCatalog);
ModelSpec north_east_torus(int side, double q);
ModelSpec spiral_rectangle(const Rectangle& box, double q,
                           BoundaryMode bm = BoundaryMode::MinimalCatalog);
ModelSpec two_children_tree(const RootedTree& tree, double q);
ModelSpec tree_east(const RootedTree& tree, double q);
/// East-on-tree constraints carried on an arbitrary host graph that shares
/// the vertex set (the host's edges are a superset of the tree's).
ModelSpec tree_east_on_graph(const Graph& host, const RootedTree& tree, double q);

/// Builds a model from the versioned JSON descriptor (schema 1).
ModelSpec model_from_json(const std::string& text);
std::string model_to_json(const ModelSpec& model);

// ---- domination ----

struct DominationReport {
  bool holds = false;
  std::uint64_t configs_checked = 0;
  bool exhaustive = false;
  // witness of violation: configuration bits and vertex
  std::optional<std::pair<std::uint64_t, Vertex>> counterexample;
};

/// True result means a dominates b: c_b(w, x) <= c_a(w, x) for all w, x
/// (b is the more constrained model). Exhaustive up to 24 vertices,
/// otherwise seeded sampling.
DominationReport dominates(const ModelSpec& a, const ModelSpec& b,
                           bool exhaustive = true, int n_samples = 10000,
                           std::uint64_t seed = 1);

}  // namespace kcsm::models
