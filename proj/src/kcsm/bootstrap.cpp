#include "kcsm/bootstrap.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace kcsm::bootstrap {

SpinConfig bootstrap_step(const ModelSpec& model, const SpinConfig& config) {
  require(model.is_binary(), ErrorCode::UnsupportedTopology,
          "bootstrap map needs a 0-1 model");
  int n = model.num_vertices();
  SpinConfig out = config;
  for (Vertex x = 0; x < n; ++x)
    if (config.get(x) == 1 && model.constraint(config, x)) out.set(x, 0);
  return out;
}

namespace {

// Work-queue closure over an arbitrary "may this site empty" mask.
SpinConfig closure_impl(const ModelSpec& model, const SpinConfig& config,
                        const std::vector<std::uint8_t>* allowed) {
  int n = model.num_vertices();
  SpinConfig cur = config;
  std::vector<std::uint8_t> queued(static_cast<std::size_t>(n), 0);
  std::deque<Vertex> queue;
  auto push = [&](Vertex x) {
    if (!queued[static_cast<std::size_t>(x)] && cur.get(x) == 1 &&
        (!allowed || (*allowed)[static_cast<std::size_t>(x)])) {
      queued[static_cast<std::size_t>(x)] = 1;
      queue.push_back(x);
    }
  };
  for (Vertex x = 0; x < n; ++x) push(x);
  while (!queue.empty()) {
    Vertex x = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(x)] = 0;
    if (cur.get(x) == 0) continue;
    if (model.constraint(cur, x)) {
      cur.set(x, 0);
      for (Vertex y : model.dependents(x)) push(y);
    }
  }
  return cur;
}

}  // namespace

SpinConfig closure(const ModelSpec& model, const SpinConfig& config) {
  require(model.is_binary(), ErrorCode::UnsupportedTopology,
          "closure needs a 0-1 model");
  return closure_impl(model, config, nullptr);
}

bool internally_spanned(const ModelSpec& model, const std::vector<Vertex>& region,
                        const SpinConfig& config) {
  require(model.is_binary(), ErrorCode::UnsupportedTopology,
          "internal spanning needs a 0-1 model");
  int n = model.num_vertices();
  // Legal moves happen inside the region with everything else occupied, so
  // good boundary sites must not help: strip the good boundary set.
  const ModelSpec* m = &model;
  ModelSpec stripped;
  if (model.num_boundary_slots() > 0) {
    stripped = ModelSpec(
        model.graph(), model.measure(), model.raw_constraints(),
        model.boundary_coords(),
        std::vector<std::uint8_t>(static_cast<std::size_t>(model.num_boundary_slots()), 0),
        model.name(), model.params_json());
    m = &stripped;
  }
  std::vector<std::uint8_t> allowed(static_cast<std::size_t>(n), 0);
  SpinConfig start(n, 1);
  for (Vertex x : region) {
    require(x >= 0 && x < n, ErrorCode::InvalidArgument, "region vertex out of range");
    allowed[static_cast<std::size_t>(x)] = 1;
    start.set(x, config.get(x));
  }
  SpinConfig fixed = closure_impl(*m, start, &allowed);
  for (Vertex x : region)
    if (fixed.get(x) != 0) return false;
  return true;
}

// ---- crossings ----

namespace {

// Logical frame for the wall walk: columns grow toward the side the crossing
// must hug, rows grow from the entry face to the exit face.
struct Frame {
  const Graph* g;
  const SpinConfig* cfg;
  Rectangle rect;
  CrossingDirection dir;
  int W, H;

  topo::Coord to_actual(int c, int r) const {
    if (dir == CrossingDirection::TopBottom)
      return topo::Coord{rect.lo[0] + c, rect.hi[1] - r};
    return topo::Coord{rect.lo[0] + r, rect.hi[1] - c};
  }

  bool vacant(int c, int r) const {
    if (c < 0 || c >= W || r < 0 || r >= H) return false;
    auto v = g->vertex_at(to_actual(c, r));
    return v && cfg->get(*v) == 0;
  }

  Vertex vertex(int c, int r) const { return *g->vertex_at(to_actual(c, r)); }
};

// headings: 0 = toward exit face, 1 = away from hug side, 2 = back toward
// entry face, 3 = toward hug side; left-of(h) = (h+3)%4
constexpr int kDc[4] = {0, -1, 0, +1};
constexpr int kDr[4] = {+1, 0, -1, 0};

struct WalkResult {
  bool reached = false;
  std::vector<std::pair<int, int>> walk;
};

WalkResult wall_walk(const Frame& f, int c0) {
  // left-hand wall follower entering at (c0, 0) heading toward the exit face
  int c = c0, r = 0, h = 0;
  WalkResult out;
  out.walk.emplace_back(c, r);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(f.W) * f.H * 4, 0);
  auto state = [&](int cc, int rr, int hh) {
    return (static_cast<std::size_t>(rr) * f.W + cc) * 4 + hh;
  };
  while (r != f.H - 1) {
    if (seen[state(c, r, h)]) return out;  // closed loop, no exit from this pocket
    seen[state(c, r, h)] = 1;
    bool moved = false;
    for (int turn : {3, 0, 1, 2}) {  // left, straight, right, back
      int nh = (h + turn) & 3;
      int nc = c + kDc[nh], nr = r + kDr[nh];
      if (f.vacant(nc, nr)) {
        c = nc;
        r = nr;
        h = nh;
        out.walk.emplace_back(c, r);
        moved = true;
        break;
      }
    }
    if (!moved) return out;  // isolated cell
  }
  out.reached = true;
  return out;
}

std::vector<std::pair<int, int>> erase_loops(const std::vector<std::pair<int, int>>& walk) {
  std::vector<std::pair<int, int>> path;
  std::map<std::pair<int, int>, std::size_t> pos;
  for (const auto& cell : walk) {
    auto it = pos.find(cell);
    if (it != pos.end()) {
      while (path.size() > it->second + 1) {
        pos.erase(path.back());
        path.pop_back();
      }
    } else {
      pos[cell] = path.size();
      path.push_back(cell);
    }
  }
  return path;
}

}  // namespace

std::optional<Crossing> find_crossing(const Graph& g, const SpinConfig& config,
                                      const Rectangle& rect, CrossingDirection dir) {
  require(g.has_embedding() && g.embedding_dim() == 2, ErrorCode::UnsupportedTopology,
          "crossings are defined on 2-d lattice volumes");
  require(rect.dim() == 2, ErrorCode::InvalidArgument, "rect must be 2-d");
  Frame f;
  f.g = &g;
  f.cfg = &config;
  f.rect = rect;
  f.dir = dir;
  if (dir == CrossingDirection::TopBottom) {
    f.W = rect.side(0);
    f.H = rect.side(1);
  } else {
    f.W = rect.side(1);
    f.H = rect.side(0);
  }

  std::vector<std::uint8_t> tried(static_cast<std::size_t>(f.W), 0);
  for (int c0 = f.W - 1; c0 >= 0; --c0) {
    if (tried[static_cast<std::size_t>(c0)] || !f.vacant(c0, 0)) continue;
    WalkResult res = wall_walk(f, c0);
    if (!res.reached) {
      // the failed walk traced its pocket's outer boundary, so every
      // entry-face cell of the pocket is on the walk; skip them
      for (auto [c, r] : res.walk)
        if (r == 0) tried[static_cast<std::size_t>(c)] = 1;
      continue;
    }
    auto cells = erase_loops(res.walk);
    Crossing out;
    out.direction = dir;
    out.path.reserve(cells.size());
    for (auto [c, r] : cells) out.path.push_back(f.vertex(c, r));
    return out;
  }
  return std::nullopt;
}

bool has_crossing(const Graph& g, const SpinConfig& config, const Rectangle& rect,
                  CrossingDirection dir) {
  require(g.has_embedding() && g.embedding_dim() == 2, ErrorCode::UnsupportedTopology,
          "crossings are defined on 2-d lattice volumes");
  // flood fill from the entry face over vacant cells
  Frame f;
  f.g = &g;
  f.cfg = &config;
  f.rect = rect;
  f.dir = dir;
  if (dir == CrossingDirection::TopBottom) {
    f.W = rect.side(0);
    f.H = rect.side(1);
  } else {
    f.W = rect.side(1);
    f.H = rect.side(0);
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(f.W) * f.H, 0);
  std::deque<std::pair<int, int>> queue;
  for (int c = 0; c < f.W; ++c)
    if (f.vacant(c, 0)) {
      seen[static_cast<std::size_t>(c)] = 1;
      queue.emplace_back(c, 0);
    }
  while (!queue.empty()) {
    auto [c, r] = queue.front();
    queue.pop_front();
    if (r == f.H - 1) return true;
    for (int d = 0; d < 4; ++d) {
      int nc = c + kDc[d], nr = r + kDr[d];
      if (f.vacant(nc, nr) && !seen[static_cast<std::size_t>(nr) * f.W + nc]) {
        seen[static_cast<std::size_t>(nr) * f.W + nc] = 1;
        queue.emplace_back(nc, nr);
      }
    }
  }
  return false;
}

// ---- threshold scan ----

SpinConfig bernoulli_vacant_config(int n, double q, std::uint64_t seed,
                                   std::uint64_t replica, rng::Purpose purpose) {
  auto s = rng::stream_for(seed, purpose, replica);
  SpinConfig cfg(n);
  for (Vertex x = 0; x < n; ++x) cfg.set(x, s.next_unit() < q ? 0 : 1);
  return cfg;
}

ThresholdEstimate estimate_qbp(const ModelFamily& family, const std::vector<int>& sizes,
                               const std::vector<double>& q_grid, int samples,
                               std::uint64_t seed) {
  require(!sizes.empty() && !q_grid.empty(), ErrorCode::InvalidArgument,
          "scan needs sizes and a q grid");
  require(samples >= 1, ErrorCode::InvalidArgument, "scan needs samples >= 1");
  require(std::is_sorted(q_grid.begin(), q_grid.end()), ErrorCode::InvalidArgument,
          "q grid must be sorted");

  std::vector<ModelSpec> ms;
  ms.reserve(sizes.size());
  for (int L : sizes) ms.push_back(family.build(L));

  // hit[replica][size][q] gathered independently, merged in replica order
  std::vector<std::vector<std::vector<std::uint8_t>>> hit(
      static_cast<std::size_t>(samples),
      std::vector<std::vector<std::uint8_t>>(
          sizes.size(), std::vector<std::uint8_t>(q_grid.size(), 0)));

  parallel_for(samples, [&](std::int64_t rep) {
    for (std::size_t si = 0; si < sizes.size(); ++si) {
      const ModelSpec& model = ms[si];
      int n = model.num_vertices();
      auto s = rng::stream_for(seed, rng::Purpose::Scan,
                               static_cast<std::uint64_t>(rep), si);
      std::vector<double> u(static_cast<std::size_t>(n));
      for (auto& v : u) v = s.next_unit();
      // shared uniforms couple the sample across the whole q grid, which
      // makes the emptied indicator nondecreasing in q sample by sample
      for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
        SpinConfig cfg(n);
        for (Vertex x = 0; x < n; ++x)
          cfg.set(x, u[static_cast<std::size_t>(x)] < q_grid[qi] ? 0 : 1);
        hit[static_cast<std::size_t>(rep)][si][qi] =
            closure(model, cfg).all_zero() ? 1 : 0;
      }
    }
  });

  ThresholdEstimate est;
  est.seed = seed;
  std::vector<std::vector<int>> counts(sizes.size(),
                                       std::vector<int>(q_grid.size(), 0));
  for (int rep = 0; rep < samples; ++rep)
    for (std::size_t si = 0; si < sizes.size(); ++si)
      for (std::size_t qi = 0; qi < q_grid.size(); ++qi)
        counts[si][qi] += hit[static_cast<std::size_t>(rep)][si][qi];

  for (std::size_t si = 0; si < sizes.size(); ++si)
    for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
      ScanRow row;
      row.size = sizes[si];
      row.q = q_grid[qi];
      row.samples = samples;
      row.emptied_fraction = static_cast<double>(counts[si][qi]) / samples;
      row.stderr_ = std::sqrt(std::max(
          row.emptied_fraction * (1.0 - row.emptied_fraction) / samples, 0.0));
      est.rows.push_back(row);
    }

  // 1/2 crossing of the largest size, linear interpolation on the bracket
  std::size_t si = sizes.size() - 1;
  const auto& c = counts[si];
  auto freq = [&](std::size_t qi) { return static_cast<double>(c[qi]) / samples; };
  est.q_hat = q_grid.back();
  est.lo = q_grid.front();
  est.hi = q_grid.back();
  if (freq(0) >= 0.5) {
    est.q_hat = q_grid.front();
    est.lo = est.hi = q_grid.front();
  } else {
    for (std::size_t qi = 0; qi + 1 < q_grid.size(); ++qi) {
      if (freq(qi) < 0.5 && freq(qi + 1) >= 0.5) {
        double slope = (freq(qi + 1) - freq(qi)) / (q_grid[qi + 1] - q_grid[qi]);
        est.q_hat = q_grid[qi] + (0.5 - freq(qi)) / slope;
        double se_f = 0.5 / std::sqrt(static_cast<double>(samples));
        double dq = se_f / slope;
        est.lo = est.q_hat - dq;
        est.hi = est.q_hat + dq;
        est.bracketed = true;
        break;
      }
    }
  }
  return est;
}

}  // namespace kcsm::bootstrap
