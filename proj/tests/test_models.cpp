#include <set>

#include "doctest.h"
#include "kcsm/models.hpp"

using namespace kcsm;
using namespace kcsm::models;
using topo::Coord;
using topo::Graph;
using topo::Rectangle;
using topo::Vertex;

namespace {

SpinConfig config_of(std::initializer_list<int> vals) {
  SpinConfig c(static_cast<int>(vals.size()));
  int i = 0;
  for (int v : vals) c.set(i++, v);
  return c;
}

SpinConfig random_config(int n, rng::Stream& s) {
  SpinConfig c(n);
  for (int x = 0; x < n; ++x) c.set(x, s.next_unit() < 0.5 ? 1 : 0);
  return c;
}

}  // namespace

TEST_CASE("site measure") {
  auto m = SiteMeasure::binary(0.3);
  CHECK(m.q() == doctest::Approx(0.3));
  CHECK(m.p() == doctest::Approx(0.7));
  CHECK(m.is_binary());
  m.validate_strict();
  auto degenerate = SiteMeasure::binary(1.0);
  degenerate.validate();
  CHECK_THROWS_AS(degenerate.validate_strict(), Error);
}

TEST_CASE("east chain constraints with minimal boundary") {
  ModelSpec east = east_chain(4, 0.5);
  // sites 0..3; the rightmost is effectively unconstrained
  SpinConfig w = config_of({1, 1, 0, 1});
  CHECK(east.constraint(w, 1) == 1);  // right neighbor vacant
  CHECK(east.constraint(w, 0) == 0);
  CHECK(east.constraint(w, 2) == 0);
  CHECK(east.constraint(w, 3) == 1);  // unconstrained by the good boundary
  CHECK(east.effectively_unconstrained(3));
  CHECK(east.range() == 1);

  ModelSpec blocked = east_chain(4, 0.5, BoundaryMode::None);
  CHECK(blocked.constraint(w, 3) == 0);
  CHECK(blocked.effectively_blocked(3));
}

TEST_CASE("FA-1f needs a vacant neighbor") {
  ModelSpec fa = fa_jf_rectangle(Rectangle{{0}, {4}}, 1, 0.5, BoundaryMode::None);
  SpinConfig ones(5, 1);
  for (int x = 0; x < 5; ++x) CHECK(fa.constraint(ones, x) == 0);
  SpinConfig w = config_of({1, 0, 1, 1, 1});
  CHECK(fa.constraint(w, 0) == 1);
  CHECK(fa.constraint(w, 2) == 1);
  CHECK(fa.constraint(w, 3) == 0);
  CHECK(fa.constraint(w, 1) == 0);  // own value does not matter, neighbors occupied
}

TEST_CASE("FA-2f threshold on a rectangle") {
  // 3x3, minimal boundary: empty on the forward boundary
  ModelSpec fa = fa_jf_rectangle(Rectangle{{0, 0}, {2, 2}}, 2, 0.5);
  const Graph& g = fa.graph();
  SpinConfig ones(9, 1);
  // the top-right corner sees two good forward boundary sites
  CHECK(fa.constraint(ones, *g.vertex_at({2, 2})) == 1);
  // the bottom-left corner sees none
  CHECK(fa.constraint(ones, *g.vertex_at({0, 0})) == 0);
  // edge midpoints of the forward faces see one good site: need one vacancy
  Vertex top_mid = *g.vertex_at({1, 2});
  CHECK(fa.constraint(ones, top_mid) == 0);
  SpinConfig w = ones;
  w.set(*g.vertex_at({0, 2}), 0);
  CHECK(fa.constraint(w, top_mid) == 1);
}

TEST_CASE("spiral constraint equals the corner logic") {
  Rectangle box{{0, 0}, {4, 4}};
  ModelSpec sp = spiral_rectangle(box, 0.5, BoundaryMode::None);
  const Graph& g = sp.graph();
  Vertex center = *g.vertex_at({2, 2});

  auto vac = [&](const SpinConfig& c, int dx, int dy) {
    return c.get(*g.vertex_at({2 + dx, 2 + dy})) == 0;
  };
  auto corner_logic = [&](const SpinConfig& c) {
    bool ne = vac(c, 0, 1) && vac(c, 1, 1);
    bool se = vac(c, 1, 0) && vac(c, 1, -1);
    bool sw = vac(c, 0, -1) && vac(c, -1, -1);
    bool nw = vac(c, -1, 0) && vac(c, -1, 1);
    return (ne || sw) && (nw || se) ? 1 : 0;
  };

  SpinConfig w(25, 1);
  // NE and NW pairs vacant, all else occupied
  w.set(*g.vertex_at({2, 3}), 0);
  w.set(*g.vertex_at({3, 3}), 0);
  w.set(*g.vertex_at({1, 2}), 0);
  w.set(*g.vertex_at({1, 3}), 0);
  CHECK(sp.constraint(w, center) == 1);

  SpinConfig only_ne(25, 1);
  only_ne.set(*g.vertex_at({2, 3}), 0);
  only_ne.set(*g.vertex_at({3, 3}), 0);
  CHECK(sp.constraint(only_ne, center) == 0);

  auto s = rng::stream_for(11, rng::Purpose::Misc);
  for (int i = 0; i < 300; ++i) {
    SpinConfig c = random_config(25, s);
    CHECK(sp.constraint(c, center) == corner_logic(c));
  }
}

TEST_CASE("catalog descriptors") {
  ModelSpec east = model_from_json(R"({"schema":1,"name":"east","n":5,"q":0.5})");
  CHECK(east.name() == "east");
  CHECK(east.num_vertices() == 5);
  CHECK(east.range() == 1);
  CHECK(east.effectively_unconstrained(4));
  // round trip through the echoed descriptor
  ModelSpec again = model_from_json(model_to_json(east));
  CHECK(again.num_vertices() == 5);

  ModelSpec tree = model_from_json(
      R"({"schema":1,"name":"two-children-tree","depth":3,"q":0.5})");
  CHECK(tree.num_vertices() == 15);
  for (Vertex x = 0; x < 15; ++x)
    CHECK(tree.effectively_unconstrained(x) == (x >= 7));  // leaves only
  SpinConfig w(15, 1);
  w.set(3, 0);
  w.set(4, 0);
  CHECK(tree.constraint(w, 1) == 1);  // both children vacant
  CHECK(tree.constraint(w, 2) == 0);

  CHECK_THROWS_AS(model_from_json(R"({"schema":1,"name":"nope","q":0.5})"), Error);
  CHECK_THROWS_AS(model_from_json(R"({"schema":2,"name":"east","n":3,"q":0.5})"), Error);
  CHECK_THROWS_AS(model_from_json("not json"), Error);
}

TEST_CASE("north-east catalog") {
  ModelSpec ne = north_east_rectangle(Rectangle{{0, 0}, {1, 1}}, 0.5,
                                      BoundaryMode::Maximal);
  const Graph& g = ne.graph();
  // top-right corner has both influence sites on the good boundary
  CHECK(ne.effectively_unconstrained(*g.vertex_at({1, 1})));
  SpinConfig ones(4, 1);
  CHECK(ne.constraint(ones, *g.vertex_at({0, 0})) == 0);

  ModelSpec torus = north_east_torus(4, 0.5);
  CHECK(torus.num_vertices() == 16);
  CHECK(torus.num_boundary_slots() == 0);
  SpinConfig c(16, 1);
  Vertex x = *torus.graph().vertex_at({1, 1});
  c.set(*torus.graph().vertex_at({1, 2}), 0);
  CHECK(torus.constraint(c, x) == 0);
  c.set(*torus.graph().vertex_at({2, 1}), 0);
  CHECK(torus.constraint(c, x) == 1);
}

TEST_CASE("Hp1: flipping the vertex itself never changes its constraint") {
  auto s = rng::stream_for(3, rng::Purpose::Misc);
  std::vector<ModelSpec> zoo;
  zoo.push_back(east_chain(6, 0.4));
  zoo.push_back(fa_jf_rectangle(Rectangle{{0, 0}, {2, 2}}, 2, 0.5));
  zoo.push_back(north_east_rectangle(Rectangle{{0, 0}, {2, 2}}, 0.5));
  zoo.push_back(spiral_rectangle(Rectangle{{0, 0}, {2, 2}}, 0.5));
  zoo.push_back(two_children_tree(topo::spanning_tree(Graph::full_binary_tree(2), 0), 0.5));
  for (const auto& m : zoo) {
    for (int trial = 0; trial < 50; ++trial) {
      SpinConfig c = random_config(m.num_vertices(), s);
      for (Vertex x = 0; x < m.num_vertices(); ++x) {
        int before = m.constraint(c, x);
        SpinConfig flipped = c;
        flipped.set(x, 1 - c.get(x));
        CHECK(m.constraint(flipped, x) == before);
      }
    }
  }
}

TEST_CASE("constraints are increasing in the good partial order") {
  auto s = rng::stream_for(5, rng::Purpose::Misc);
  std::vector<ModelSpec> zoo;
  zoo.push_back(east_chain(6, 0.4));
  zoo.push_back(fa_jf_rectangle(Rectangle{{0, 0}, {2, 2}}, 2, 0.5));
  zoo.push_back(north_east_torus(3, 0.5));
  zoo.push_back(spiral_rectangle(Rectangle{{0, 0}, {2, 2}}, 0.5));
  for (const auto& m : zoo) {
    int n = m.num_vertices();
    for (int trial = 0; trial < 100; ++trial) {
      SpinConfig lo = random_config(n, s);
      SpinConfig hi = lo;
      for (int x = 0; x < n; ++x)
        if (hi.get(x) == 1 && s.next_unit() < 0.4) hi.set(x, 0);  // more vacancies
      CHECK(lo.leq_good(hi));
      for (Vertex x = 0; x < n; ++x) CHECK(m.constraint(lo, x) <= m.constraint(hi, x));
    }
  }
}

TEST_CASE("boundary enters only through the good indicators") {
  // compiled evaluation agrees with the raw influence-class evaluation fed
  // with the model's own indicator vector
  auto s = rng::stream_for(9, rng::Purpose::Misc);
  std::vector<ModelSpec> zoo;
  zoo.push_back(east_chain(5, 0.5));
  zoo.push_back(fa_jf_rectangle(Rectangle{{0, 0}, {2, 1}}, 2, 0.5));
  zoo.push_back(north_east_rectangle(Rectangle{{0, 0}, {2, 2}}, 0.5, BoundaryMode::Maximal));
  zoo.push_back(spiral_rectangle(Rectangle{{0, 0}, {2, 2}}, 0.5, BoundaryMode::Maximal));
  for (const auto& m : zoo) {
    std::vector<std::uint8_t> flags(m.boundary_good());
    for (int trial = 0; trial < 100; ++trial) {
      SpinConfig c = random_config(m.num_vertices(), s);
      for (Vertex x = 0; x < m.num_vertices(); ++x)
        CHECK(m.constraint(c, x) == m.constraint_raw(c, x, flags));
    }
  }
}

TEST_CASE("general state spaces evaluate through the good set") {
  // three states, good = {0, 2}
  SiteMeasure m;
  m.probs = {0.3, 0.5, 0.2};
  m.good = {1, 0, 1};
  Graph g = Graph::path(3);
  std::vector<VertexConstraint> cons(3);
  cons[0].kind = VertexConstraint::Kind::Sets;
  cons[0].sets.push_back({{1}});
  cons[1].kind = VertexConstraint::Kind::Threshold;
  cons[1].threshold_sites = {0, 2};
  cons[1].threshold_j = 2;
  cons[2].kind = VertexConstraint::Kind::Always;
  ModelSpec model(g, m, cons, {}, {}, "custom");
  CHECK(model.measure().q() == doctest::Approx(0.5));
  GeneralConfig cfg = {1, 2, 0};
  CHECK(model.constraint(cfg, 0) == 1);  // state 2 is good
  CHECK(model.constraint(cfg, 1) == 0);  // site 0 is in state 1 (bad)
  CHECK(model.constraint(cfg, 2) == 1);
  cfg[0] = 2;
  CHECK(model.constraint(cfg, 1) == 1);
}

TEST_CASE("Hp1 violations are rejected") {
  Graph g = Graph::path(2);
  std::vector<VertexConstraint> cons(2);
  cons[0].kind = VertexConstraint::Kind::Sets;
  cons[0].sets.push_back({{0}});  // vertex in its own influence class
  cons[1].kind = VertexConstraint::Kind::Always;
  CHECK_THROWS_AS(ModelSpec(g, SiteMeasure::binary(0.5), cons, {}, {}, "bad"), Error);
}

TEST_CASE("domination") {
  int n = 6;
  Graph path = Graph::path(n);
  ModelSpec east = east_chain(n, 0.5);
  ModelSpec fa1 = fa_jf_graph(path, 1, 0.5, n - 1);
  ModelSpec fa2 = fa_jf_graph(path, 2, 0.5, n - 1);

  SUBCASE("FA-1f dominates East on a path with matching unconstrained end") {
    auto rep = dominates(fa1, east);
    CHECK(rep.holds);
    CHECK(rep.exhaustive);
    CHECK(rep.configs_checked == (1ull << n));
  }
  SUBCASE("a model dominates itself") {
    CHECK(dominates(east, east).holds);
    CHECK(dominates(fa2, fa2).holds);
  }
  SUBCASE("East does not dominate FA-1f") {
    auto rep = dominates(east, fa1);
    CHECK(!rep.holds);
    CHECK(rep.counterexample.has_value());
  }
  SUBCASE("transitivity instance: FA-2f <= East <= FA-1f pointwise") {
    CHECK(dominates(east, fa2).holds);
    CHECK(dominates(fa1, east).holds);
    CHECK(dominates(fa1, fa2).holds);
  }
  SUBCASE("FA-1f dominates FA-2f on a 3x3 square with maximal boundary") {
    Rectangle box{{0, 0}, {2, 2}};
    ModelSpec a = fa_jf_rectangle(box, 1, 0.5, BoundaryMode::Maximal);
    ModelSpec b = fa_jf_rectangle(box, 2, 0.5, BoundaryMode::Maximal);
    auto rep = dominates(a, b);
    CHECK(rep.holds);
    CHECK(rep.configs_checked == 512);
  }
  SUBCASE("sampled mode finds counterexamples too") {
    auto rep = dominates(east, fa1, false, 2000, 17);
    CHECK(!rep.holds);
  }
  SUBCASE("mismatched models are rejected") {
    CHECK_THROWS_AS(dominates(east, east_chain(n + 1, 0.5)), Error);
    CHECK_THROWS_AS(dominates(east, east_chain(n, 0.4)), Error);
  }
}
