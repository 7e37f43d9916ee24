#include "kcsm/dynamics.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>

namespace kcsm::dynamics {

namespace {

struct Pending {
  double time;
  std::uint32_t vertex;
  bool operator>(const Pending& o) const {
    return time > o.time || (time == o.time && vertex > o.vertex);
  }
};

}  // namespace

void run_dynamics(const ModelSpec& model, SpinConfig& state, double t_max,
                  std::uint64_t seed, std::uint64_t replica,
                  const std::function<bool(const Event&, int)>& on_event) {
  require(model.is_binary(), ErrorCode::UnsupportedTopology,
          "the event-driven engine runs 0-1 models");
  require(t_max >= 0.0, ErrorCode::InvalidArgument, "t_max must be >= 0");
  int n = model.num_vertices();
  require(state.size() == n, ErrorCode::InvalidArgument, "config size mismatch");

  // One independent stream per vertex: ring gaps and resample values are
  // consumed in trajectory order from the vertex's own stream, so the whole
  // run is a pure function of (seed, replica).
  std::vector<rng::Stream> clock;
  clock.reserve(static_cast<std::size_t>(n));
  std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>> queue;
  for (Vertex x = 0; x < n; ++x) {
    clock.emplace_back(rng::stream_for(seed, rng::Purpose::Clock, replica,
                                       static_cast<std::uint64_t>(x)));
    double t = clock.back().next_exp();
    if (t <= t_max) queue.push({t, static_cast<std::uint32_t>(x)});
  }

  const double q = model.measure().q();
  while (!queue.empty()) {
    Pending ev = queue.top();
    queue.pop();
    Vertex x = static_cast<Vertex>(ev.vertex);
    Event rec;
    rec.time = ev.time;
    rec.vertex = ev.vertex;
    int old_state = state.get(x);
    if (model.constraint(state, x)) {
      double u = clock[static_cast<std::size_t>(x)].next_unit();
      int next = u < q ? 0 : 1;
      rec.new_state = static_cast<std::uint8_t>(next);
      rec.flags = 1;
      state.set(x, next);
    } else {
      rec.new_state = static_cast<std::uint8_t>(old_state);
      rec.flags = 0;
    }
    if (!on_event(rec, old_state)) return;
    double t = ev.time + clock[static_cast<std::size_t>(x)].next_exp();
    if (t <= t_max) queue.push({t, ev.vertex});
  }
}

Trajectory simulate(const ModelSpec& model, const SpinConfig& initial, double t_max,
                    std::uint64_t seed, std::uint64_t replica) {
  Trajectory tr;
  tr.initial = initial;
  tr.seed = seed;
  tr.replica = replica;
  tr.t_max = t_max;
  SpinConfig state = initial;
  run_dynamics(model, state, t_max, seed, replica,
               [&](const Event& ev, int) {
                 tr.events.push_back(ev);
                 return true;
               });
  tr.final_config = state;
  return tr;
}

SpinConfig Trajectory::replay() const {
  SpinConfig state = initial;
  for (const Event& ev : events)
    if (ev.applied()) state.set(static_cast<Vertex>(ev.vertex), ev.new_state);
  return state;
}

namespace {
constexpr char kTrajectoryMagic[8] = {'K', 'C', 'S', 'M', 'T', 'R', 'J', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
}  // namespace

void Trajectory::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path);
  out.write(kTrajectoryMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(initial.size()));
  put<std::uint64_t>(out, seed);
  put<std::uint64_t>(out, replica);
  put<double>(out, t_max);
  put<std::uint64_t>(out, events.size());
  for (int x = 0; x < initial.size(); x += 8) {
    std::uint8_t byte = 0;
    for (int b = 0; b < 8 && x + b < initial.size(); ++b)
      byte |= static_cast<std::uint8_t>(initial.get(x + b)) << b;
    put<std::uint8_t>(out, byte);
  }
  for (const Event& ev : events) {
    put<double>(out, ev.time);
    put<std::uint32_t>(out, ev.vertex);
    put<std::uint8_t>(out, ev.new_state);
    put<std::uint8_t>(out, ev.flags);
  }
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path);
}

Trajectory Trajectory::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(std::memcmp(magic, kTrajectoryMagic, 8) == 0, ErrorCode::Io,
          "not a trajectory file: " + path);
  Trajectory tr;
  auto n = get<std::uint32_t>(in);
  tr.seed = get<std::uint64_t>(in);
  tr.replica = get<std::uint64_t>(in);
  tr.t_max = get<double>(in);
  auto n_events = get<std::uint64_t>(in);
  tr.initial = SpinConfig(static_cast<int>(n));
  for (std::uint32_t x = 0; x < n; x += 8) {
    auto byte = get<std::uint8_t>(in);
    for (std::uint32_t b = 0; b < 8 && x + b < n; ++b)
      tr.initial.set(static_cast<int>(x + b), (byte >> b) & 1);
  }
  tr.events.resize(n_events);
  for (auto& ev : tr.events) {
    ev.time = get<double>(in);
    ev.vertex = get<std::uint32_t>(in);
    ev.new_state = get<std::uint8_t>(in);
    ev.flags = get<std::uint8_t>(in);
  }
  require(static_cast<bool>(in), ErrorCode::Io, "truncated trajectory file: " + path);
  tr.final_config = tr.replay();
  return tr;
}

SpinConfig sample_equilibrium(const SiteMeasure& measure, int n_vertices,
                              std::uint64_t seed, std::uint64_t replica) {
  measure.validate();
  require(measure.probs.size() == 2, ErrorCode::UnsupportedTopology,
          "bit-packed equilibrium samples need a two-state measure");
  auto s = rng::stream_for(seed, rng::Purpose::InitConfig, replica);
  SpinConfig cfg(n_vertices);
  double p0 = measure.probs[0];
  for (int x = 0; x < n_vertices; ++x) cfg.set(x, s.next_unit() < p0 ? 0 : 1);
  return cfg;
}

PersistenceCurve persistence(const ModelSpec& model, Vertex origin,
                             const std::vector<double>& t_grid, int n_samples,
                             std::uint64_t seed) {
  require(!t_grid.empty() && std::is_sorted(t_grid.begin(), t_grid.end()),
          ErrorCode::InvalidArgument, "t grid must be sorted and nonempty");
  require(t_grid.front() >= 0.0, ErrorCode::InvalidArgument, "t grid must be >= 0");
  require(origin >= 0 && origin < model.num_vertices(), ErrorCode::InvalidArgument,
          "origin out of range");
  require(n_samples >= 1, ErrorCode::InvalidArgument, "need samples >= 1");
  double t_max = t_grid.back();

  struct Outcome {
    double flip_time;  // inf when the origin survived to t_max
    int eta0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(n_samples));

  parallel_for(n_samples, [&](std::int64_t rep) {
    SpinConfig state = sample_equilibrium(model.measure(), model.num_vertices(),
                                          seed, static_cast<std::uint64_t>(rep));
    int eta0 = state.get(origin);
    double flip = std::numeric_limits<double>::infinity();
    run_dynamics(model, state, t_max, seed, static_cast<std::uint64_t>(rep),
                 [&](const Event& ev, int old_state) {
                   if (ev.applied() && static_cast<Vertex>(ev.vertex) == origin &&
                       ev.new_state != old_state) {
                     flip = ev.time;
                     return false;
                   }
                   return true;
                 });
    outcomes[static_cast<std::size_t>(rep)] = {flip, eta0};
  });

  PersistenceCurve curve;
  curve.t = t_grid;
  curve.n_samples = static_cast<std::uint64_t>(n_samples);
  curve.F.resize(t_grid.size());
  curve.F0.resize(t_grid.size());
  curve.F1.resize(t_grid.size());
  curve.se.resize(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    std::uint64_t c0 = 0, c1 = 0;
    for (const auto& o : outcomes)
      if (o.flip_time > t_grid[k]) (o.eta0 == 0 ? c0 : c1)++;
    double f = static_cast<double>(c0 + c1) / n_samples;
    curve.F[k] = f;
    curve.F0[k] = static_cast<double>(c0) / n_samples;
    curve.F1[k] = static_cast<double>(c1) / n_samples;
    curve.se[k] = std::sqrt(std::max(f * (1.0 - f) / n_samples, 0.0));
  }
  return curve;
}

double HittingResult::mean() const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += s.t;
  return acc / static_cast<double>(samples.size());
}

double HittingResult::stderr_() const {
  if (samples.size() < 2) return 0.0;
  double m = mean(), acc = 0.0;
  for (const auto& s : samples) acc += (s.t - m) * (s.t - m);
  return std::sqrt(acc / (static_cast<double>(samples.size()) - 1.0) /
                   static_cast<double>(samples.size()));
}

HittingResult hitting_time(const ModelSpec& model,
                           const std::optional<SpinConfig>& start,
                           const std::function<bool(const SpinConfig&)>& in_A,
                           int n_samples, std::uint64_t seed, double t_cap) {
  require(n_samples >= 1, ErrorCode::InvalidArgument, "need samples >= 1");
  require(t_cap > 0.0, ErrorCode::InvalidArgument, "t_cap must be > 0");
  HittingResult out;
  out.t_cap = t_cap;
  out.samples.resize(static_cast<std::size_t>(n_samples));

  parallel_for(n_samples, [&](std::int64_t rep) {
    SpinConfig state = start ? *start
                             : sample_equilibrium(model.measure(), model.num_vertices(),
                                                  seed, static_cast<std::uint64_t>(rep));
    HittingSample s;
    if (in_A(state)) {
      s.t = 0.0;
    } else {
      s.t = t_cap;
      s.censored = true;
      run_dynamics(model, state, t_cap, seed, static_cast<std::uint64_t>(rep),
                   [&](const Event& ev, int old_state) {
                     if (ev.applied() && ev.new_state != old_state && in_A(state)) {
                       s.t = ev.time;
                       s.censored = false;
                       return false;
                     }
                     return true;
                   });
    }
    out.samples[static_cast<std::size_t>(rep)] = s;
  });

  for (const auto& s : out.samples)
    if (s.censored) ++out.n_censored;
  out.reliable = out.n_censored < out.samples.size();
  return out;
}

double default_t_cap(double q, int n_vertices) {
  require(q > 0.0 && n_vertices > 0, ErrorCode::InvalidArgument,
          "cap heuristic needs q > 0 and n > 0");
  return 1e4 / (q * static_cast<double>(n_vertices));
}

}  // namespace kcsm::dynamics
