#include "kcsm/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace kcsm::topo {

Rectangle::Rectangle(Coord a, Coord b) : lo(std::move(a)), hi(std::move(b)) {
  require(lo.size() == hi.size() && !lo.empty(), ErrorCode::InvalidArgument,
          "rectangle corners must have equal positive dimension");
  for (std::size_t i = 0; i < lo.size(); ++i)
    require(lo[i] <= hi[i], ErrorCode::InvalidArgument,
            "rectangle lower corner must be <= upper corner");
}

std::int64_t Rectangle::volume() const {
  std::int64_t v = 1;
  for (int i = 0; i < dim(); ++i) v *= side(i);
  return v;
}

bool Rectangle::contains(const Coord& c) const {
  if (static_cast<int>(c.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (c[i] < lo[i] || c[i] > hi[i]) return false;
  return true;
}

std::vector<Coord> Rectangle::cells() const {
  std::vector<Coord> out;
  out.reserve(static_cast<std::size_t>(volume()));
  Coord c = lo;
  while (true) {
    out.push_back(c);
    int axis = dim() - 1;
    while (axis >= 0) {
      if (++c[axis] <= hi[axis]) break;
      c[axis] = lo[axis];
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

void Graph::finalize() {
  max_degree_ = 0;
  for (auto& nb : adj_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    max_degree_ = std::max(max_degree_, static_cast<int>(nb.size()));
  }
  for (int x = 0; x < n_; ++x)
    for (Vertex y : adj_[static_cast<std::size_t>(x)]) {
      require(y >= 0 && y < n_, ErrorCode::InvalidArgument, "edge endpoint out of range");
      require(y != x, ErrorCode::InvalidArgument, "self-loops are not allowed");
      const auto& back = adj_[static_cast<std::size_t>(y)];
      require(std::binary_search(back.begin(), back.end(), x),
              ErrorCode::InvalidArgument, "adjacency must be symmetric");
    }
  if (!coords_.empty()) {
    coord_index_.clear();
    for (int x = 0; x < n_; ++x) coord_index_[coords_[static_cast<std::size_t>(x)]] = x;
    require(static_cast<int>(coord_index_.size()) == n_, ErrorCode::InvalidArgument,
            "embedding coordinates must be distinct");
  }
}

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  require(n > 0, ErrorCode::InvalidArgument, "graph needs at least one vertex");
  Graph g;
  g.n_ = n;
  g.adj_.assign(static_cast<std::size_t>(n), {});
  for (auto [u, v] : edges) {
    require(u >= 0 && u < n && v >= 0 && v < n, ErrorCode::InvalidArgument,
            "edge endpoint out of range");
    require(u != v, ErrorCode::InvalidArgument, "self-loops are not allowed");
    g.adj_[static_cast<std::size_t>(u)].push_back(v);
    g.adj_[static_cast<std::size_t>(v)].push_back(u);
  }
  g.finalize();
  return g;
}

Graph Graph::from_edge_list_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::pair<int, int>> edges;
  int max_id = -1;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;
    require(static_cast<bool>(ls >> v), ErrorCode::Io,
            "edge list line needs two vertex ids: '" + line + "'");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    max_id = std::max(max_id, static_cast<int>(std::max(u, v)));
  }
  require(max_id >= 0, ErrorCode::Io, "edge list is empty");
  return from_edges(max_id + 1, edges);
}

Graph Graph::from_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open edge list file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_edge_list_text(ss.str());
}

Graph Graph::path(int n) {
  Rectangle box{Coord{0}, Coord{n - 1}};
  return lattice(box);
}

Graph Graph::lattice(const Rectangle& box) {
  Graph g;
  auto cells = box.cells();
  g.n_ = static_cast<int>(cells.size());
  g.coords_ = cells;
  g.adj_.assign(static_cast<std::size_t>(g.n_), {});
  g.kind_ = GraphKind::Lattice;
  std::map<Coord, Vertex> index;
  for (int i = 0; i < g.n_; ++i) index[cells[static_cast<std::size_t>(i)]] = i;
  for (int i = 0; i < g.n_; ++i) {
    Coord c = cells[static_cast<std::size_t>(i)];
    for (int axis = 0; axis < box.dim(); ++axis) {
      ++c[axis];
      auto it = index.find(c);
      if (it != index.end()) {
        g.adj_[static_cast<std::size_t>(i)].push_back(it->second);
        g.adj_[static_cast<std::size_t>(it->second)].push_back(i);
      }
      --c[axis];
    }
  }
  g.finalize();
  return g;
}

Graph Graph::torus(const std::vector<int>& sides) {
  Graph g;
  int d = static_cast<int>(sides.size());
  require(d >= 1, ErrorCode::InvalidArgument, "torus needs at least one axis");
  std::int64_t n = 1;
  for (int s : sides) {
    require(s >= 3, ErrorCode::InvalidArgument, "torus sides must be >= 3");
    n *= s;
  }
  Coord lo(static_cast<std::size_t>(d), 0), hi(static_cast<std::size_t>(d), 0);
  for (int i = 0; i < d; ++i) hi[static_cast<std::size_t>(i)] = sides[static_cast<std::size_t>(i)] - 1;
  Rectangle box{lo, hi};
  auto cells = box.cells();
  g.n_ = static_cast<int>(n);
  g.coords_ = cells;
  g.adj_.assign(static_cast<std::size_t>(g.n_), {});
  g.kind_ = GraphKind::Torus;
  std::map<Coord, Vertex> index;
  for (int i = 0; i < g.n_; ++i) index[cells[static_cast<std::size_t>(i)]] = i;
  for (int i = 0; i < g.n_; ++i) {
    for (int axis = 0; axis < d; ++axis) {
      Coord c = cells[static_cast<std::size_t>(i)];
      c[static_cast<std::size_t>(axis)] =
          (c[static_cast<std::size_t>(axis)] + 1) % sides[static_cast<std::size_t>(axis)];
      Vertex j = index.at(c);
      if (j != i) {
        g.adj_[static_cast<std::size_t>(i)].push_back(j);
        g.adj_[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  g.finalize();
  return g;
}

Graph Graph::full_binary_tree(int depth) {
  require(depth >= 0, ErrorCode::InvalidArgument, "depth must be >= 0");
  int n = (1 << (depth + 1)) - 1;
  std::vector<std::pair<int, int>> edges;
  for (int x = 1; x < n; ++x) edges.emplace_back((x - 1) / 2, x);
  return from_edges(n, edges);
}

Graph Graph::star(int leaves) {
  require(leaves >= 1, ErrorCode::InvalidArgument, "star needs >= 1 leaf");
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
  return from_edges(leaves + 1, edges);
}

Graph Graph::erdos_renyi_connected(int n, double p, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "need n >= 1");
  require(p > 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "need p in (0,1]");
  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    auto s = rng::stream_for(seed, rng::Purpose::Misc, attempt);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (s.next_unit() < p) edges.emplace_back(u, v);
    Graph g = from_edges(n, edges);
    if (g.connected()) return g;
  }
  fail(ErrorCode::InvalidArgument, "could not draw a connected graph; p too small");
}

std::optional<Vertex> Graph::vertex_at(const Coord& c) const {
  auto it = coord_index_.find(c);
  if (it == coord_index_.end()) return std::nullopt;
  return it->second;
}

Rectangle Graph::bounding_box() const {
  require(has_embedding(), ErrorCode::UnsupportedTopology, "graph has no embedding");
  Coord lo = coords_[0], hi = coords_[0];
  for (const auto& c : coords_)
    for (std::size_t i = 0; i < c.size(); ++i) {
      lo[i] = std::min(lo[i], c[i]);
      hi[i] = std::max(hi[i], c[i]);
    }
  return Rectangle{lo, hi};
}

bool Graph::connected() const {
  if (n_ == 0) return false;
  auto dist = bfs_distances(0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

std::vector<int> Graph::bfs_distances(Vertex source) const {
  std::vector<int> dist(static_cast<std::size_t>(n_), -1);
  std::deque<Vertex> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    Vertex x = queue.front();
    queue.pop_front();
    for (Vertex y : adj_[static_cast<std::size_t>(x)])
      if (dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
        queue.push_back(y);
      }
  }
  return dist;
}

int Graph::distance(Vertex a, Vertex b) const {
  return bfs_distances(a)[static_cast<std::size_t>(b)];
}

std::vector<std::vector<Vertex>> RootedTree::children() const {
  std::vector<std::vector<Vertex>> ch(static_cast<std::size_t>(graph.num_vertices()));
  for (Vertex x = 0; x < graph.num_vertices(); ++x)
    if (parent[static_cast<std::size_t>(x)] >= 0)
      ch[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])].push_back(x);
  return ch;
}

void RootedTree::validate() const {
  int n = graph.num_vertices();
  require(static_cast<int>(parent.size()) == n, ErrorCode::InvalidArgument,
          "parent map size mismatch");
  require(root >= 0 && root < n && parent[static_cast<std::size_t>(root)] == -1,
          ErrorCode::InvalidArgument, "root must have no parent");
  for (Vertex x = 0; x < n; ++x) {
    if (x == root) continue;
    Vertex p = parent[static_cast<std::size_t>(x)];
    require(p >= 0 && p < n, ErrorCode::InvalidArgument, "non-root vertex without parent");
    const auto& nb = graph.neighbors(x);
    require(std::binary_search(nb.begin(), nb.end(), p), ErrorCode::InvalidArgument,
            "parent must be a neighbor");
    // walk to root, bounded by n steps (detects cycles)
    Vertex cur = x;
    int steps = 0;
    while (cur != root) {
      cur = parent[static_cast<std::size_t>(cur)];
      require(cur >= 0 && ++steps <= n, ErrorCode::InvalidArgument,
              "parent chain does not reach root");
    }
  }
}

namespace {

void push_offsets(const Coord& x, int dim, NeighborhoodKind kind, std::vector<Coord>& out) {
  switch (kind) {
    case NeighborhoodKind::N:
      for (int axis = 0; axis < dim; ++axis)
        for (int s : {-1, +1}) {
          Coord c = x;
          c[static_cast<std::size_t>(axis)] += s;
          out.push_back(std::move(c));
        }
      break;
    case NeighborhoodKind::NStar: {
      // all alpha in {-1,0,1}^d minus the origin
      std::vector<int> a(static_cast<std::size_t>(dim), -1);
      while (true) {
        bool zero = std::all_of(a.begin(), a.end(), [](int v) { return v == 0; });
        if (!zero) {
          Coord c = x;
          for (int i = 0; i < dim; ++i) c[static_cast<std::size_t>(i)] += a[static_cast<std::size_t>(i)];
          out.push_back(std::move(c));
        }
        int i = dim - 1;
        while (i >= 0 && a[static_cast<std::size_t>(i)] == 1) a[static_cast<std::size_t>(i--)] = -1;
        if (i < 0) break;
        ++a[static_cast<std::size_t>(i)];
      }
      break;
    }
    case NeighborhoodKind::K:
      // forward unit steps: the nearest neighbors with alpha_i >= 0
      for (int axis = 0; axis < dim; ++axis) {
        Coord c = x;
        c[static_cast<std::size_t>(axis)] += 1;
        out.push_back(std::move(c));
      }
      break;
    case NeighborhoodKind::KStar: {
      // alpha in {0,1}^d minus the origin
      for (unsigned mask = 1; mask < (1u << dim); ++mask) {
        Coord c = x;
        for (int i = 0; i < dim; ++i)
          if (mask & (1u << i)) c[static_cast<std::size_t>(i)] += 1;
        out.push_back(std::move(c));
      }
      break;
    }
  }
}

}  // namespace

std::vector<Coord> neighborhood_coords(const Coord& x, int dim, NeighborhoodKind kind) {
  std::vector<Coord> out;
  push_offsets(x, dim, kind, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Coord> neighborhood_coords(const Graph& g, Vertex x, NeighborhoodKind kind) {
  require(g.has_embedding() && g.kind() == GraphKind::Lattice,
          ErrorCode::UnsupportedTopology,
          "oriented neighborhoods need a lattice embedding");
  return neighborhood_coords(g.coord(x), g.embedding_dim(), kind);
}

std::vector<Vertex> neighborhood(const Graph& g, Vertex x, NeighborhoodKind kind) {
  auto coords = neighborhood_coords(g, x, kind);
  std::vector<Vertex> out;
  for (const auto& c : coords)
    if (auto v = g.vertex_at(c)) out.push_back(*v);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Coord> forward_boundary(const Rectangle& rect, bool star) {
  std::set<Coord> acc;
  for (const auto& x : rect.cells()) {
    auto nb = neighborhood_coords(x, rect.dim(),
                                  star ? NeighborhoodKind::KStar : NeighborhoodKind::K);
    for (auto& c : nb)
      if (!rect.contains(c)) acc.insert(std::move(c));
  }
  return {acc.begin(), acc.end()};
}

RootedTree spanning_tree(const Graph& g, Vertex root) {
  require(root >= 0 && root < g.num_vertices(), ErrorCode::InvalidArgument,
          "root out of range");
  require(g.connected(), ErrorCode::UnsupportedTopology,
          "spanning tree needs a connected graph");
  int n = g.num_vertices();
  std::vector<Vertex> parent(static_cast<std::size_t>(n), -2);
  parent[static_cast<std::size_t>(root)] = -1;
  std::deque<Vertex> queue{root};
  std::vector<std::pair<int, int>> edges;
  while (!queue.empty()) {
    Vertex x = queue.front();
    queue.pop_front();
    for (Vertex y : g.neighbors(x))  // neighbor lists are sorted: lowest index first
      if (parent[static_cast<std::size_t>(y)] == -2) {
        parent[static_cast<std::size_t>(y)] = x;
        edges.emplace_back(x, y);
        queue.push_back(y);
      }
  }
  RootedTree t;
  t.graph = Graph::from_edges(n, edges);
  t.root = root;
  t.parent = std::move(parent);
  t.validate();
  return t;
}

std::string coord_to_string(const Coord& c) {
  std::string s = "(";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(c[i]);
  }
  return s + ")";
}

}  // namespace kcsm::topo
