#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kcsm/common.hpp"

namespace kcsm::topo {

using Vertex = std::int32_t;
using Coord = std::vector<std::int32_t>;

/// Integer box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Rectangle {
  Coord lo;
  Coord hi;

  Rectangle() = default;
  Rectangle(Coord a, Coord b);

  int dim() const { return static_cast<int>(lo.size()); }
  std::int64_t volume() const;
  int side(int axis) const { return hi[axis] - lo[axis] + 1; }
  bool contains(const Coord& c) const;
  std::vector<Coord> cells() const;  // lex order, last axis fastest
};

enum class NeighborhoodKind { N, NStar, K, KStar };

enum class GraphKind { General, Lattice, Torus };

/// Finite undirected graph with dense vertex indices 0..n-1 and optional
/// Z^d embedding (present for lattice constructions). Immutable after
/// construction; safe to share across threads.
class Graph {
 public:
  Graph() = default;

  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges);
  static Graph from_edge_list_text(const std::string& text);
  static Graph from_edge_list_file(const std::string& path);
  static Graph path(int n);
  static Graph lattice(const Rectangle& box);
  static Graph torus(const std::vector<int>& sides);
  static Graph full_binary_tree(int depth);  // depth 0 = single root
  static Graph star(int leaves);
  // Seeded Erdos-Renyi conditioned on connectivity (retries until connected).
  static Graph erdos_renyi_connected(int n, double p, std::uint64_t seed);

  int num_vertices() const { return n_; }
  const std::vector<Vertex>& neighbors(Vertex x) const { return adj_[static_cast<std::size_t>(x)]; }
  int degree(Vertex x) const { return static_cast<int>(adj_[static_cast<std::size_t>(x)].size()); }
  int max_degree() const { return max_degree_; }
  GraphKind kind() const { return kind_; }

  bool has_embedding() const { return !coords_.empty(); }
  int embedding_dim() const { return coords_.empty() ? 0 : static_cast<int>(coords_[0].size()); }
  const Coord& coord(Vertex x) const { return coords_[static_cast<std::size_t>(x)]; }
  std::optional<Vertex> vertex_at(const Coord& c) const;
  Rectangle bounding_box() const;

  bool connected() const;
  std::vector<int> bfs_distances(Vertex source) const;
  int distance(Vertex a, Vertex b) const;

 private:
  void finalize();

  int n_ = 0;
  std::vector<std::vector<Vertex>> adj_;
  std::vector<Coord> coords_;
  std::map<Coord, Vertex> coord_index_;
  GraphKind kind_ = GraphKind::General;
  int max_degree_ = 0;
};

/// Rooted spanning/arbitrary tree over a graph's vertex set. parent[root] = -1.
struct RootedTree {
  Graph graph;  // the tree as a graph (edges = parent links)
  Vertex root = 0;
  std::vector<Vertex> parent;

  std::vector<std::vector<Vertex>> children() const;
  void validate() const;
};

/// In-graph part of the requested neighborhood, sorted by vertex index.
/// Kinds follow the usual lattice conventions: N = nearest neighbors,
/// N* = Moore neighborhood, K = forward nearest neighbors {x + e_i},
/// K* = forward Moore corner {x + sum a_i e_i : a_i in {0,1}} \ {x}.
std::vector<Vertex> neighborhood(const Graph& g, Vertex x, NeighborhoodKind kind);

/// All lattice coordinates of the neighborhood, including points outside the
/// graph (virtual boundary coordinates).
std::vector<Coord> neighborhood_coords(const Graph& g, Vertex x, NeighborhoodKind kind);

std::vector<Coord> neighborhood_coords(const Coord& x, int dim, NeighborhoodKind kind);

/// Forward boundary of a rectangle: union of K_x (star = false) or K*_x
/// (star = true) over x in the box, minus the box itself. Sorted lex.
std::vector<Coord> forward_boundary(const Rectangle& rect, bool star);

/// Deterministic BFS spanning tree: vertices are visited in index order and
/// each vertex gets the lowest-index neighbor that reached it first.
RootedTree spanning_tree(const Graph& g, Vertex root);

std::string coord_to_string(const Coord& c);

}  // namespace kcsm::topo
