#include <algorithm>
#include <set>

#include "doctest.h"
#include "kcsm/topology.hpp"

using namespace kcsm;
using namespace kcsm::topo;

namespace {

// brute-force oracle: enumerate alpha vectors straight from the definitions
std::set<Coord> oracle_neighborhood(const Coord& x, NeighborhoodKind kind) {
  int d = static_cast<int>(x.size());
  std::set<Coord> out;
  std::vector<int> a(static_cast<std::size_t>(d), -1);
  while (true) {
    int l1 = 0, linf = 0, sumsq = 0;
    bool nonneg = true, zeroone = true;
    for (int v : a) {
      l1 += std::abs(v);
      linf = std::max(linf, std::abs(v));
      sumsq += v * v;
      if (v < 0) nonneg = false;
      if (v != 0 && v != 1) zeroone = false;
    }
    bool keep = false;
    switch (kind) {
      case NeighborhoodKind::N: keep = (l1 == 1); break;
      case NeighborhoodKind::NStar: keep = (sumsq != 0 && linf <= 1); break;
      case NeighborhoodKind::K: keep = (l1 == 1 && nonneg); break;
      case NeighborhoodKind::KStar: keep = (sumsq != 0 && zeroone); break;
    }
    if (keep) {
      Coord c = x;
      for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] += a[static_cast<std::size_t>(i)];
      out.insert(c);
    }
    int i = d - 1;
    while (i >= 0 && a[static_cast<std::size_t>(i)] == 1) a[static_cast<std::size_t>(i--)] = -1;
    if (i < 0) break;
    ++a[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

TEST_CASE("rectangle basics") {
  Rectangle r{{0, 0}, {2, 3}};
  CHECK(r.volume() == 12);
  CHECK(r.contains({1, 2}));
  CHECK(!r.contains({3, 0}));
  CHECK(r.cells().size() == 12);
  CHECK_THROWS_AS(Rectangle({2}, {1}), Error);
}

TEST_CASE("lattice graph adjacency matches unit coordinate steps") {
  Graph g = Graph::lattice(Rectangle{{0, 0}, {2, 2}});
  CHECK(g.num_vertices() == 9);
  CHECK(g.max_degree() == 4);
  for (Vertex x = 0; x < g.num_vertices(); ++x) {
    for (Vertex y : g.neighbors(x)) {
      int diff = 0;
      for (int i = 0; i < 2; ++i) diff += std::abs(g.coord(x)[i] - g.coord(y)[i]);
      CHECK(diff == 1);
    }
    // kind=N equals graph adjacency on embedded lattices
    auto n = neighborhood(g, x, NeighborhoodKind::N);
    CHECK(n == g.neighbors(x));
  }
}

TEST_CASE("oriented neighborhoods in d=2") {
  Graph g = Graph::lattice(Rectangle{{-2, -2}, {2, 2}});
  Vertex origin = *g.vertex_at({0, 0});

  auto k = neighborhood_coords(g, origin, NeighborhoodKind::K);
  CHECK(k == std::vector<Coord>{{0, 1}, {1, 0}});

  auto kstar = neighborhood_coords(g, origin, NeighborhoodKind::KStar);
  CHECK(kstar == std::vector<Coord>{{0, 1}, {1, 0}, {1, 1}});

  auto nstar = neighborhood_coords(g, origin, NeighborhoodKind::NStar);
  CHECK(nstar.size() == 8);

  for (auto kind : {NeighborhoodKind::N, NeighborhoodKind::NStar,
                    NeighborhoodKind::K, NeighborhoodKind::KStar}) {
    auto got = neighborhood_coords(g, origin, kind);
    std::set<Coord> expect = oracle_neighborhood({0, 0}, kind);
    CHECK(std::set<Coord>(got.begin(), got.end()) == expect);
  }
}

TEST_CASE("oriented neighborhoods in d=1") {
  Graph g = Graph::path(5);
  // N* equals N in one dimension
  CHECK(neighborhood_coords(g, 0, NeighborhoodKind::NStar) ==
        std::vector<Coord>{{-1}, {1}});
  CHECK(neighborhood(g, 0, NeighborhoodKind::NStar) == std::vector<Vertex>{1});
  CHECK(neighborhood_coords(g, 2, NeighborhoodKind::K) == std::vector<Coord>{{3}});
}

TEST_CASE("neighborhood requires an embedding") {
  Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  CHECK_THROWS_AS(neighborhood(g, 0, NeighborhoodKind::K), Error);
}

TEST_CASE("forward boundary of rectangles") {
  // d=1, [0,2]: union of K_x minus the box is {3}
  auto b = forward_boundary(Rectangle{{0}, {2}}, false);
  CHECK(b == std::vector<Coord>{{3}});

  // single cell in d=2, star version
  auto bs = forward_boundary(Rectangle{{0, 0}, {0, 0}}, true);
  CHECK(bs == std::vector<Coord>{{0, 1}, {1, 0}, {1, 1}});

  // oracle: direct union over cells, and disjointness from the box
  Rectangle rect{{0, 0}, {3, 2}};
  for (bool star : {false, true}) {
    std::set<Coord> expect;
    for (const auto& x : rect.cells())
      for (const auto& c : oracle_neighborhood(
               x, star ? NeighborhoodKind::KStar : NeighborhoodKind::K))
        if (!rect.contains(c)) expect.insert(c);
    auto got = forward_boundary(rect, star);
    CHECK(std::set<Coord>(got.begin(), got.end()) == expect);
    for (const auto& c : got) CHECK(!rect.contains(c));
  }

  // forward boundary is contained in the star forward boundary
  auto plain = forward_boundary(rect, false);
  auto star = forward_boundary(rect, true);
  std::set<Coord> star_set(star.begin(), star.end());
  for (const auto& c : plain) CHECK(star_set.count(c) == 1);
}

TEST_CASE("spanning tree is deterministic BFS by index") {
  SUBCASE("path is its own spanning tree") {
    Graph g = Graph::path(3);
    RootedTree t = spanning_tree(g, 0);
    CHECK(t.parent == std::vector<Vertex>{-1, 0, 1});
  }
  SUBCASE("triangle rooted at 0") {
    Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
    RootedTree t = spanning_tree(g, 0);
    CHECK(t.parent == std::vector<Vertex>{-1, 0, 0});
  }
  SUBCASE("star rooted at center") {
    Graph g = Graph::star(3);
    RootedTree t = spanning_tree(g, 0);
    CHECK(t.parent == std::vector<Vertex>{-1, 0, 0, 0});
  }
  SUBCASE("idempotent under re-rooting at the same vertex") {
    Graph g = Graph::erdos_renyi_connected(9, 0.4, 7);
    RootedTree t1 = spanning_tree(g, 2);
    RootedTree t2 = spanning_tree(g, 2);
    CHECK(t1.parent == t2.parent);
  }
  SUBCASE("disconnected graph is rejected") {
    Graph g = Graph::from_edges(4, {{0, 1}, {2, 3}});
    CHECK_THROWS_AS(spanning_tree(g, 0), Error);
  }
}

TEST_CASE("edge list round trip") {
  Graph g = Graph::from_edge_list_text("0 1\n1 2\n2 3\n# comment\n3 0\n");
  CHECK(g.num_vertices() == 4);
  CHECK(g.degree(0) == 2);
  CHECK(g.connected());
}

TEST_CASE("erdos-renyi helper is seeded and connected") {
  Graph a = Graph::erdos_renyi_connected(10, 0.3, 42);
  Graph b = Graph::erdos_renyi_connected(10, 0.3, 42);
  CHECK(a.connected());
  for (Vertex x = 0; x < 10; ++x) CHECK(a.neighbors(x) == b.neighbors(x));
}
