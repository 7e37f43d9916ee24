#include "kcsm/models.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace kcsm::models {

using nlohmann::json;

SiteMeasure SiteMeasure::binary(double q) {
  require(q >= 0.0 && q <= 1.0, ErrorCode::InvalidArgument, "q must be in [0,1]");
  SiteMeasure m;
  m.probs = {q, 1.0 - q};
  m.good = {1, 0};
  return m;
}

bool SiteMeasure::is_binary() const {
  return probs.size() == 2 && good.size() == 2 && good[0] == 1 && good[1] == 0;
}

double SiteMeasure::q() const {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (good[i]) s += probs[i];
  return s;
}

void SiteMeasure::validate() const {
  require(!probs.empty() && probs.size() == good.size(), ErrorCode::InvalidArgument,
          "site measure needs matching state and good-flag lists");
  double s = 0.0;
  for (double v : probs) {
    require(v >= 0.0, ErrorCode::InvalidArgument, "probabilities must be >= 0");
    s += v;
  }
  require(std::abs(s - 1.0) <= 1e-12, ErrorCode::InvalidArgument,
          "probabilities must sum to 1");
}

void SiteMeasure::validate_strict() const {
  validate();
  for (double v : probs)
    require(v > 0.0, ErrorCode::InvalidArgument,
            "every state needs positive probability");
}

std::string boundary_mode_name(BoundaryMode m) {
  switch (m) {
    case BoundaryMode::None: return "none";
    case BoundaryMode::GoodSet: return "good-set";
    case BoundaryMode::Maximal: return "maximal";
    case BoundaryMode::MinimalCatalog: return "minimal";
  }
  return "?";
}

ModelSpec::ModelSpec(Graph graph, SiteMeasure measure,
                     std::vector<VertexConstraint> constraints,
                     std::vector<Coord> boundary_coords,
                     std::vector<std::uint8_t> boundary_good, std::string name,
                     std::string params_json)
    : graph_(std::move(graph)),
      measure_(std::move(measure)),
      raw_(std::move(constraints)),
      boundary_coords_(std::move(boundary_coords)),
      boundary_good_(std::move(boundary_good)),
      name_(std::move(name)),
      params_json_(std::move(params_json)) {
  measure_.validate_strict();
  require(static_cast<int>(raw_.size()) == graph_.num_vertices(),
          ErrorCode::InvalidArgument, "one constraint per vertex required");
  require(boundary_coords_.empty() ||
              boundary_coords_.size() == boundary_good_.size(),
          ErrorCode::InvalidArgument, "boundary slot metadata mismatch");
  compile();
  compute_range();
}

void ModelSpec::compile() {
  int n = graph_.num_vertices();
  int n_slots = num_boundary_slots();
  auto check_site = [&](Vertex x, Site s) {
    require(s >= 0 && s < n + n_slots, ErrorCode::InvalidArgument,
            "influence site id out of range");
    // Hp1: the vertex itself never appears in its own influence class
    require(s != x, ErrorCode::InvalidArgument,
            "Hp1 violated: vertex " + std::to_string(x) +
                " appears in its own influence class");
  };

  compiled_.assign(static_cast<std::size_t>(n), {});
  for (Vertex x = 0; x < n; ++x) {
    const VertexConstraint& raw = raw_[static_cast<std::size_t>(x)];
    Compiled& out = compiled_[static_cast<std::size_t>(x)];
    switch (raw.kind) {
      case VertexConstraint::Kind::Always:
        out.always = true;
        break;
      case VertexConstraint::Kind::Sets: {
        for (const InfluenceSet& is : raw.sets) {
          require(!is.sites.empty(), ErrorCode::InvalidArgument,
                  "influence sets must be nonempty");
          bool dropped = false;
          CompiledSet cs;
          for (Site s : is.sites) {
            check_site(x, s);
            if (s >= n) {
              if (!boundary_good_[static_cast<std::size_t>(s - n)]) {
                dropped = true;  // this set can never be satisfied
                break;
              }
              // good boundary sites are always satisfied; drop from the set
            } else {
              cs.members.push_back(s);
            }
          }
          if (dropped) continue;
          if (cs.members.empty()) {
            // all members are good boundary sites: constraint always holds
            out.always = true;
            break;
          }
          std::sort(cs.members.begin(), cs.members.end());
          cs.members.erase(std::unique(cs.members.begin(), cs.members.end()),
                           cs.members.end());
          std::map<std::uint32_t, std::uint64_t> words;
          for (Vertex y : cs.members)
            words[static_cast<std::uint32_t>(y) >> 6] |= 1ull << (y & 63);
          cs.masks.assign(words.begin(), words.end());
          out.sets.push_back(std::move(cs));
        }
        break;
      }
      case VertexConstraint::Kind::Threshold: {
        int bonus = 0;
        for (Site s : raw.threshold_sites) {
          check_site(x, s);
          if (s >= n) {
            if (boundary_good_[static_cast<std::size_t>(s - n)]) ++bonus;
          } else {
            out.threshold_members.push_back(s);
          }
        }
        std::sort(out.threshold_members.begin(), out.threshold_members.end());
        out.threshold_members.erase(
            std::unique(out.threshold_members.begin(), out.threshold_members.end()),
            out.threshold_members.end());
        out.threshold_need = raw.threshold_j - bonus;
        if (out.threshold_need <= 0)
          out.always = true;
        else
          out.is_threshold = true;
        break;
      }
    }
  }

  dependents_.assign(static_cast<std::size_t>(n), {});
  for (Vertex x = 0; x < n; ++x) {
    for (Vertex y : support_of_constraint(x))
      dependents_[static_cast<std::size_t>(y)].push_back(x);
  }
  for (auto& d : dependents_) {
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
}

void ModelSpec::compute_range() {
  range_ = 0;
  int n = graph_.num_vertices();
  for (Vertex x = 0; x < n; ++x) {
    const VertexConstraint& raw = raw_[static_cast<std::size_t>(x)];
    std::vector<Site> members;
    if (raw.kind == VertexConstraint::Kind::Sets) {
      for (const auto& s : raw.sets)
        members.insert(members.end(), s.sites.begin(), s.sites.end());
    } else if (raw.kind == VertexConstraint::Kind::Threshold) {
      members = raw.threshold_sites;
    }
    if (members.empty()) continue;

    std::vector<Vertex> interior;
    for (Site s : members) {
      if (s < n) {
        interior.push_back(s);
      } else if (graph_.has_embedding() &&
                 !boundary_coords_.empty()) {
        const Coord& a = graph_.coord(x);
        const Coord& b = boundary_coords_[static_cast<std::size_t>(s - n)];
        int dist = 0;
        for (std::size_t i = 0; i < a.size(); ++i) dist += std::abs(a[i] - b[i]);
        range_ = std::max(range_, dist);
      } else {
        range_ = std::max(range_, 1);
      }
    }
    if (interior.empty()) continue;

    // truncated BFS from x until all interior members are seen
    std::set<Vertex> targets(interior.begin(), interior.end());
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::deque<Vertex> queue{x};
    dist[static_cast<std::size_t>(x)] = 0;
    targets.erase(x);
    while (!queue.empty() && !targets.empty()) {
      Vertex u = queue.front();
      queue.pop_front();
      for (Vertex v : graph_.neighbors(u))
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          targets.erase(v);
          queue.push_back(v);
        }
    }
    require(targets.empty(), ErrorCode::InvalidArgument,
            "influence class member unreachable from its vertex (Hp2)");
    for (Vertex y : interior)
      range_ = std::max(range_, dist[static_cast<std::size_t>(y)]);
  }
}

int ModelSpec::constraint(const SpinConfig& cfg, Vertex x) const {
  const Compiled& c = compiled_[static_cast<std::size_t>(x)];
  if (c.always) return 1;
  if (c.is_threshold) {
    int need = c.threshold_need;
    int remaining = static_cast<int>(c.threshold_members.size());
    int count = 0;
    for (Vertex y : c.threshold_members) {
      count += 1 - cfg.get(y);
      if (count >= need) return 1;
      --remaining;
      if (count + remaining < need) return 0;
    }
    return 0;
  }
  const auto& words = cfg.words();
  for (const auto& s : c.sets) {
    bool ok = true;
    for (auto [w, m] : s.masks)
      if (words[w] & m) {
        ok = false;
        break;
      }
    if (ok) return 1;
  }
  return 0;
}

int ModelSpec::constraint(const GeneralConfig& cfg, Vertex x) const {
  const Compiled& c = compiled_[static_cast<std::size_t>(x)];
  if (c.always) return 1;
  auto is_good = [&](Vertex y) {
    return measure_.good[cfg[static_cast<std::size_t>(y)]] != 0;
  };
  if (c.is_threshold) {
    int count = 0;
    for (Vertex y : c.threshold_members)
      if (is_good(y) && ++count >= c.threshold_need) return 1;
    return 0;
  }
  for (const auto& s : c.sets) {
    bool ok = true;
    for (Vertex y : s.members)
      if (!is_good(y)) {
        ok = false;
        break;
      }
    if (ok) return 1;
  }
  return 0;
}

int ModelSpec::constraint_raw(const SpinConfig& cfg, Vertex x,
                              const std::vector<std::uint8_t>& boundary_is_good) const {
  int n = graph_.num_vertices();
  auto good = [&](Site s) {
    if (s >= n) return boundary_is_good[static_cast<std::size_t>(s - n)] != 0;
    return cfg.get(s) == 0;
  };
  const VertexConstraint& raw = raw_[static_cast<std::size_t>(x)];
  switch (raw.kind) {
    case VertexConstraint::Kind::Always:
      return 1;
    case VertexConstraint::Kind::Sets:
      for (const auto& is : raw.sets) {
        bool ok = true;
        for (Site s : is.sites)
          if (!good(s)) {
            ok = false;
            break;
          }
        if (ok) return 1;
      }
      return 0;
    case VertexConstraint::Kind::Threshold: {
      int count = 0;
      for (Site s : raw.threshold_sites)
        if (good(s) && ++count >= raw.threshold_j) return 1;
      return 0;
    }
  }
  return 0;
}

bool ModelSpec::effectively_unconstrained(Vertex x) const {
  return compiled_[static_cast<std::size_t>(x)].always;
}

bool ModelSpec::effectively_blocked(Vertex x) const {
  const Compiled& c = compiled_[static_cast<std::size_t>(x)];
  if (c.always) return false;
  if (c.is_threshold)
    return c.threshold_need > static_cast<int>(c.threshold_members.size());
  return c.sets.empty();
}

std::vector<Vertex> ModelSpec::support_of_constraint(Vertex x) const {
  const Compiled& c = compiled_[static_cast<std::size_t>(x)];
  if (c.always) return {};
  std::set<Vertex> acc;
  if (c.is_threshold) {
    if (c.threshold_need <= static_cast<int>(c.threshold_members.size()))
      acc.insert(c.threshold_members.begin(), c.threshold_members.end());
  } else {
    for (const auto& s : c.sets) acc.insert(s.members.begin(), s.members.end());
  }
  return {acc.begin(), acc.end()};
}

const std::vector<Vertex>& ModelSpec::dependents(Vertex y) const {
  return dependents_[static_cast<std::size_t>(y)];
}

// ---- catalog ----

namespace {

// Accumulates boundary slots keyed by coordinate, shared across vertices.
class SlotTable {
 public:
  explicit SlotTable(int n_interior) : n_(n_interior) {}

  Site slot_for(const Coord& c) {
    auto it = index_.find(c);
    if (it != index_.end()) return n_ + it->second;
    int id = static_cast<int>(coords_.size());
    index_[c] = id;
    coords_.push_back(c);
    return n_ + id;
  }

  std::vector<Coord> coords() const { return coords_; }

  std::vector<std::uint8_t> good_flags(BoundaryMode bm,
                                       const std::set<Coord>& minimal_good,
                                       const std::vector<Coord>* explicit_good) const {
    std::vector<std::uint8_t> flags(coords_.size(), 0);
    switch (bm) {
      case BoundaryMode::None:
        break;
      case BoundaryMode::Maximal:
        std::fill(flags.begin(), flags.end(), 1);
        break;
      case BoundaryMode::MinimalCatalog:
        for (std::size_t i = 0; i < coords_.size(); ++i)
          if (minimal_good.count(coords_[i])) flags[i] = 1;
        break;
      case BoundaryMode::GoodSet: {
        require(explicit_good != nullptr, ErrorCode::InvalidArgument,
                "good-set boundary mode needs the explicit site list");
        std::set<Coord> want(explicit_good->begin(), explicit_good->end());
        for (const auto& c : want)
          require(index_.count(c) != 0, ErrorCode::InvalidArgument,
                  "good boundary site " + topo::coord_to_string(c) +
                      " is not in the boundary set of the model");
        for (std::size_t i = 0; i < coords_.size(); ++i)
          if (want.count(coords_[i])) flags[i] = 1;
        break;
      }
    }
    return flags;
  }

 private:
  int n_;
  std::map<Coord, int> index_;
  std::vector<Coord> coords_;
};

Site site_for_coord(const Graph& g, SlotTable& slots, const Coord& c) {
  if (auto v = g.vertex_at(c)) return *v;
  return slots.slot_for(c);
}

json basic_params(const std::string& name, double q) {
  json j;
  j["schema"] = 1;
  j["name"] = name;
  j["q"] = q;
  return j;
}

}  // namespace

ModelSpec east_chain(int n, double q, BoundaryMode bm) {
  require(n >= 1, ErrorCode::InvalidArgument, "east chain needs n >= 1");
  Graph g = Graph::path(n);
  SlotTable slots(n);
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    c.kind = VertexConstraint::Kind::Sets;
    Site right = (x + 1 < n) ? x + 1 : slots.slot_for(Coord{n});
    c.sets.push_back({{right}});
  }
  // minimal boundary: the rightmost vertex is unconstrained, i.e. the
  // virtual right neighbor is good (here minimal and maximal coincide)
  std::set<Coord> minimal{Coord{n}};
  json params = basic_params("east", q);
  params["n"] = n;
  params["boundary"] = boundary_mode_name(bm);
  return ModelSpec(std::move(g), SiteMeasure::binary(q), std::move(cons),
                   slots.coords(), slots.good_flags(bm, minimal, nullptr), "east",
                   params.dump());
}

ModelSpec fa_jf_rectangle(const Rectangle& box, int j, double q, BoundaryMode bm) {
  int d = box.dim();
  require(j >= 1 && j <= 2 * d, ErrorCode::InvalidArgument,
          "FA-jf on Z^d needs 1 <= j <= 2d");
  Graph g = Graph::lattice(box);
  int n = g.num_vertices();
  SlotTable slots(n);
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    c.kind = VertexConstraint::Kind::Threshold;
    c.threshold_j = j;
    for (const Coord& nb : topo::neighborhood_coords(g, x, topo::NeighborhoodKind::N))
      c.threshold_sites.push_back(site_for_coord(g, slots, nb));
  }
  // minimal catalog boundary: identically empty on the forward boundary
  auto fwd = topo::forward_boundary(box, false);
  std::set<Coord> minimal(fwd.begin(), fwd.end());
  json params = basic_params(j == 1 ? "fa1f" : "fa" + std::to_string(j) + "f", q);
  params["rect"] = {box.lo, box.hi};
  params["j"] = j;
  params["boundary"] = boundary_mode_name(bm);
  return ModelSpec(std::move(g), SiteMeasure::binary(q), std::move(cons),
                   slots.coords(), slots.good_flags(bm, minimal, nullptr),
                   "fa" + std::to_string(j) + "f", params.dump());
}

ModelSpec fa_jf_graph(const Graph& g, int j, double q,
                      std::optional<Vertex> unconstrained_root) {
  require(j >= 1 && j <= g.max_degree(), ErrorCode::InvalidArgument,
          "FA-jf needs 1 <= j <= max degree");
  int n = g.num_vertices();
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    if (unconstrained_root && *unconstrained_root == x) {
      c.kind = VertexConstraint::Kind::Always;
      continue;
    }
    c.kind = VertexConstraint::Kind::Threshold;
    c.threshold_j = j;
    const auto& nb = g.neighbors(x);
    c.threshold_sites.assign(nb.begin(), nb.end());
  }
  json params = basic_params("fa" + std::to_string(j) + "f-graph", q);
  params["n"] = n;
  params["j"] = j;
  if (unconstrained_root) params["root"] = *unconstrained_root;
  return ModelSpec(g, SiteMeasure::binary(q), std::move(cons), {}, {},
                   "fa" + std::to_string(j) + "f-graph", params.dump());
}

ModelSpec north_east_rectangle(const Rectangle& box, double q, BoundaryMode bm) {
  require(box.dim() == 2, ErrorCode::UnsupportedTopology,
          "North-East model lives on Z^2");
  Graph g = Graph::lattice(box);
  int n = g.num_vertices();
  SlotTable slots(n);
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    const Coord& c0 = g.coord(x);
    Coord north = c0, east = c0;
    north[1] += 1;
    east[0] += 1;
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    c.kind = VertexConstraint::Kind::Sets;
    InfluenceSet is;
    is.sites = {site_for_coord(g, slots, north), site_for_coord(g, slots, east)};
    std::sort(is.sites.begin(), is.sites.end());
    c.sets.push_back(std::move(is));
  }
  // the full forward boundary is needed for irreducibility, so the minimal
  // catalog boundary coincides with the maximal one
  auto fwd = topo::forward_boundary(box, false);
  std::set<Coord> minimal(fwd.begin(), fwd.end());
  json params = basic_params("north-east", q);
  params["rect"] = {box.lo, box.hi};
  params["boundary"] = boundary_mode_name(bm);
  return ModelSpec(std::move(g), SiteMeasure::binary(q), std::move(cons),
                   slots.coords(), slots.good_flags(bm, minimal, nullptr),
                   "north-east", params.dump());
}

ModelSpec north_east_torus(int side, double q) {
  Graph g = Graph::torus({side, side});
  int n = g.num_vertices();
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    const Coord& c0 = g.coord(x);
    Coord north = c0, east = c0;
    north[1] = (north[1] + 1) % side;
    east[0] = (east[0] + 1) % side;
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    c.kind = VertexConstraint::Kind::Sets;
    InfluenceSet is;
    is.sites = {*g.vertex_at(north), *g.vertex_at(east)};
    std::sort(is.sites.begin(), is.sites.end());
    c.sets.push_back(std::move(is));
  }
  json params = basic_params("north-east", q);
  params["L"] = side;
  params["periodic"] = true;
  return ModelSpec(std::move(g), SiteMeasure::binary(q), std::move(cons), {}, {},
                   "north-east", params.dump());
}

ModelSpec spiral_rectangle(const Rectangle& box, double q, BoundaryMode bm) {
  require(box.dim() == 2, ErrorCode::UnsupportedTopology, "Spiral model lives on Z^2");
  Graph g = Graph::lattice(box);
  int n = g.num_vertices();
  SlotTable slots(n);
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  auto at = [](const Coord& c, int dx, int dy) {
    return Coord{c[0] + dx, c[1] + dy};
  };
  for (Vertex x = 0; x < n; ++x) {
    const Coord& c0 = g.coord(x);
    // corner pairs: NE = {+e2, +e1+e2}, SE = {+e1, +e1-e2},
    //               SW = {-e2, -e2-e1}, NW = {-e1, -e1+e2}
    std::vector<Coord> ne{at(c0, 0, 1), at(c0, 1, 1)};
    std::vector<Coord> se{at(c0, 1, 0), at(c0, 1, -1)};
    std::vector<Coord> sw{at(c0, 0, -1), at(c0, -1, -1)};
    std::vector<Coord> nw{at(c0, -1, 0), at(c0, -1, 1)};
    auto make_set = [&](const std::vector<Coord>& a, const std::vector<Coord>& b) {
      InfluenceSet is;
      for (const auto& c : a) is.sites.push_back(site_for_coord(g, slots, c));
      for (const auto& c : b) is.sites.push_back(site_for_coord(g, slots, c));
      std::sort(is.sites.begin(), is.sites.end());
      is.sites.erase(std::unique(is.sites.begin(), is.sites.end()), is.sites.end());
      return is;
    };
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    c.kind = VertexConstraint::Kind::Sets;
    c.sets = {make_set(ne, se), make_set(se, sw), make_set(sw, nw), make_set(nw, ne)};
  }
  // no per-model minimal prescription; treat minimal as maximal
  auto fwd = topo::forward_boundary(box, true);
  std::set<Coord> minimal;
  json params = basic_params("spiral", q);
  params["rect"] = {box.lo, box.hi};
  params["boundary"] = boundary_mode_name(bm);
  BoundaryMode eff = (bm == BoundaryMode::MinimalCatalog) ? BoundaryMode::Maximal : bm;
  return ModelSpec(std::move(g), SiteMeasure::binary(q), std::move(cons),
                   slots.coords(), slots.good_flags(eff, minimal, nullptr),
                   "spiral", params.dump());
}

ModelSpec two_children_tree(const RootedTree& tree, double q) {
  tree.validate();
  int n = tree.graph.num_vertices();
  auto children = tree.children();
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    const auto& ch = children[static_cast<std::size_t>(x)];
    if (ch.empty()) {
      c.kind = VertexConstraint::Kind::Always;  // leaves are unconstrained
      continue;
    }
    require(ch.size() == 2, ErrorCode::InvalidArgument,
            "two-children model needs a binary tree");
    c.kind = VertexConstraint::Kind::Sets;
    InfluenceSet is;
    is.sites = {ch[0], ch[1]};
    std::sort(is.sites.begin(), is.sites.end());
    c.sets.push_back(std::move(is));
  }
  json params = basic_params("two-children-tree", q);
  params["n"] = n;
  params["root"] = tree.root;
  return ModelSpec(tree.graph, SiteMeasure::binary(q), std::move(cons), {}, {},
                   "two-children-tree", params.dump());
}

ModelSpec tree_east_on_graph(const Graph& host, const RootedTree& tree, double q) {
  tree.validate();
  int n = host.num_vertices();
  require(tree.graph.num_vertices() == n, ErrorCode::InvalidArgument,
          "tree and host graph must share the vertex set");
  std::vector<VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    VertexConstraint& c = cons[static_cast<std::size_t>(x)];
    if (x == tree.root) {
      c.kind = VertexConstraint::Kind::Always;  // the root is unconstrained
      continue;
    }
    Vertex parent = tree.parent[static_cast<std::size_t>(x)];
    const auto& nb = host.neighbors(x);
    require(std::binary_search(nb.begin(), nb.end(), parent),
            ErrorCode::InvalidArgument, "tree edge missing from host graph");
    c.kind = VertexConstraint::Kind::Sets;
    c.sets.push_back({{parent}});
  }
  json params = basic_params("tree-east", q);
  params["n"] = n;
  params["root"] = tree.root;
  return ModelSpec(host, SiteMeasure::binary(q), std::move(cons), {}, {},
                   "tree-east", params.dump());
}

ModelSpec tree_east(const RootedTree& tree, double q) {
  return tree_east_on_graph(tree.graph, tree, q);
}

// ---- JSON descriptor ----

namespace {

Graph graph_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "path") return Graph::path(j.at("n").get<int>());
  if (kind == "rect") {
    Coord lo = j.at("lo").get<Coord>();
    Coord hi = j.at("hi").get<Coord>();
    return Graph::lattice(Rectangle{lo, hi});
  }
  if (kind == "torus") return Graph::torus(j.at("sides").get<std::vector<int>>());
  if (kind == "binary-tree") return Graph::full_binary_tree(j.at("depth").get<int>());
  if (kind == "star") return Graph::star(j.at("leaves").get<int>());
  if (kind == "er")
    return Graph::erdos_renyi_connected(j.at("n").get<int>(), j.at("p").get<double>(),
                                        j.at("seed").get<std::uint64_t>());
  if (kind == "edge-list") return Graph::from_edge_list_file(j.at("path").get<std::string>());
  if (kind == "edge-list-inline")
    return Graph::from_edge_list_text(j.at("text").get<std::string>());
  fail(ErrorCode::InvalidArgument, "unknown graph kind: " + kind);
}

BoundaryMode boundary_from_json(const json& j, std::vector<Coord>* good_out) {
  if (!j.is_string()) {
    require(j.is_object() && j.contains("good"), ErrorCode::InvalidArgument,
            "boundary must be a mode name or {\"good\": [...]} object");
    for (const auto& c : j.at("good")) good_out->push_back(c.get<Coord>());
    return BoundaryMode::GoodSet;
  }
  std::string s = j.get<std::string>();
  if (s == "none") return BoundaryMode::None;
  if (s == "maximal") return BoundaryMode::Maximal;
  if (s == "minimal") return BoundaryMode::MinimalCatalog;
  fail(ErrorCode::InvalidArgument, "unknown boundary mode: " + s);
}

ModelSpec apply_unconstrained(ModelSpec model, const std::vector<Vertex>& extra) {
  if (extra.empty()) return model;
  auto cons = model.raw_constraints();
  for (Vertex x : extra) {
    require(x >= 0 && x < model.num_vertices(), ErrorCode::InvalidArgument,
            "unconstrained vertex id out of range");
    cons[static_cast<std::size_t>(x)] = VertexConstraint{VertexConstraint::Kind::Always, {}, {}, 0};
  }
  json params = json::parse(model.params_json());
  params["unconstrained"] = extra;
  return ModelSpec(model.graph(), model.measure(), std::move(cons),
                   model.boundary_coords(),
                   std::vector<std::uint8_t>(model.boundary_good()), model.name(),
                   params.dump());
}

Rectangle rect_from_json(const json& j) {
  if (j.is_array() && j.size() == 2)
    return Rectangle{j.at(0).get<Coord>(), j.at(1).get<Coord>()};
  fail(ErrorCode::InvalidArgument, "rect must be [[lo...],[hi...]]");
}

}  // namespace

ModelSpec model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("model descriptor is not valid JSON: ") + e.what());
  }
  require(j.value("schema", 0) == 1, ErrorCode::InvalidArgument,
          "model descriptor schema must be 1");
  std::string name = j.at("name").get<std::string>();
  double q = j.at("q").get<double>();
  std::vector<Coord> good;
  BoundaryMode bm = j.contains("boundary")
                        ? boundary_from_json(j.at("boundary"), &good)
                        : BoundaryMode::MinimalCatalog;
  require(bm != BoundaryMode::GoodSet || !good.empty(), ErrorCode::InvalidArgument,
          "good-set boundary needs a nonempty site list");

  ModelSpec model;
  if (name == "east") {
    model = east_chain(j.at("n").get<int>(), q, bm);
  } else if (name == "fa1f" || name == "fa2f" || name == "fajf") {
    int jj = name == "fa1f" ? 1 : (name == "fa2f" ? 2 : j.at("j").get<int>());
    if (j.contains("rect")) {
      model = fa_jf_rectangle(rect_from_json(j.at("rect")), jj, q, bm);
    } else if (j.contains("n") && !j.contains("graph")) {
      model = fa_jf_rectangle(Rectangle{Coord{0}, Coord{j.at("n").get<int>() - 1}}, jj, q, bm);
    } else {
      std::optional<Vertex> root;
      if (j.contains("root")) root = j.at("root").get<Vertex>();
      model = fa_jf_graph(graph_from_json(j.at("graph")), jj, q, root);
    }
  } else if (name == "north-east") {
    if (j.value("periodic", false))
      model = north_east_torus(j.at("L").get<int>(), q);
    else if (j.contains("rect"))
      model = north_east_rectangle(rect_from_json(j.at("rect")), q, bm);
    else {
      int L = j.at("L").get<int>();
      model = north_east_rectangle(Rectangle{Coord{0, 0}, Coord{L - 1, L - 1}}, q, bm);
    }
  } else if (name == "spiral") {
    if (j.contains("rect"))
      model = spiral_rectangle(rect_from_json(j.at("rect")), q, bm);
    else {
      int L = j.at("L").get<int>();
      model = spiral_rectangle(Rectangle{Coord{0, 0}, Coord{L - 1, L - 1}}, q, bm);
    }
  } else if (name == "two-children-tree") {
    Graph g = j.contains("graph") ? graph_from_json(j.at("graph"))
                                  : Graph::full_binary_tree(j.at("depth").get<int>());
    model = two_children_tree(topo::spanning_tree(g, j.value("root", 0)), q);
  } else if (name == "tree-east") {
    Graph g = graph_from_json(j.at("graph"));
    model = tree_east(topo::spanning_tree(g, j.value("root", 0)), q);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown model name: " + name);
  }

  if (j.contains("unconstrained"))
    model = apply_unconstrained(std::move(model),
                                j.at("unconstrained").get<std::vector<Vertex>>());
  return model;
}

std::string model_to_json(const ModelSpec& model) { return model.params_json(); }

// ---- domination ----

DominationReport dominates(const ModelSpec& a, const ModelSpec& b, bool exhaustive,
                           int n_samples, std::uint64_t seed) {
  require(a.num_vertices() == b.num_vertices(), ErrorCode::InvalidArgument,
          "domination needs models on the same vertex set");
  require(a.measure() == b.measure(), ErrorCode::InvalidArgument,
          "domination needs a common single-site measure");
  require(a.is_binary() && b.is_binary(), ErrorCode::UnsupportedTopology,
          "domination check is implemented for 0-1 models");
  int n = a.num_vertices();
  DominationReport rep;
  rep.holds = true;
  if (exhaustive) {
    require(n <= 24, ErrorCode::CapExceeded,
            "exhaustive domination check is capped at 24 vertices");
    rep.exhaustive = true;
    std::uint64_t total = 1ull << n;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
      SpinConfig cfg = SpinConfig::from_bits(n, bits);
      ++rep.configs_checked;
      for (Vertex x = 0; x < n; ++x)
        if (b.constraint(cfg, x) > a.constraint(cfg, x)) {
          rep.holds = false;
          rep.counterexample = {bits, x};
          return rep;
        }
    }
    return rep;
  }
  auto s = rng::stream_for(seed, rng::Purpose::Misc);
  for (int i = 0; i < n_samples; ++i) {
    SpinConfig cfg(n);
    std::uint64_t bits = 0;
    for (Vertex x = 0; x < n; ++x) {
      int v = s.next_unit() < 0.5 ? 0 : 1;
      cfg.set(x, v);
      if (x < 64 && v) bits |= 1ull << x;
    }
    ++rep.configs_checked;
    for (Vertex x = 0; x < n; ++x)
      if (b.constraint(cfg, x) > a.constraint(cfg, x)) {
        rep.holds = false;
        rep.counterexample = {bits, x};
        return rep;
      }
  }
  return rep;
}

}  // namespace kcsm::models
