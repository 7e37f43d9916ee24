#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace kcsm {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedTopology,
  CapExceeded,
  SolverFailure,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; bijective on u64
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives a stream key from up to four label words. Used to key independent
// streams by (seed, purpose, replica, vertex) so that replicas and sites are
// decoupled from scheduling and worker count.
inline std::uint64_t derive_key(std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t k = mix64(a + kGolden);
  k = mix64(k ^ (b + 2 * kGolden));
  k = mix64(k ^ (c + 3 * kGolden));
  k = mix64(k ^ (d + 4 * kGolden));
  return k;
}

enum class Purpose : std::uint64_t {
  InitConfig = 1,
  Clock = 2,
  Scan = 3,
  Oracle = 4,
  Interaction = 5,
  Solver = 6,
  Misc = 7,
};

// Counter-based stream: the i-th output is mix64(key + i*golden), so a stream
// is a pure function of (key, counter) and never shares state across threads.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + (++ctr_) * kGolden); }

  // uniform in [0, 1)
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Exp(1)
  double next_exp() { return -std::log1p(-next_unit()); }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double next_normal() {
    // Box-Muller, one value per call pair
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

inline Stream stream_for(std::uint64_t seed, Purpose purpose,
                         std::uint64_t replica = 0, std::uint64_t item = 0) {
  return Stream(derive_key(seed, static_cast<std::uint64_t>(purpose), replica,
                           item));
}

}  // namespace rng

// FNV-1a, used for config hashes embedded in output headers (stable across
// platforms, unlike std::hash).
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Shortest round-trip formatting for doubles in CSV bodies; deterministic.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer a shorter representation when it round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

inline int worker_count() {
  if (const char* env = std::getenv("KCSM_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count). Results must be written to preallocated
// slots indexed by i so the merge order never depends on the worker count.
inline void parallel_for(std::int64_t count,
                         const std::function<void(std::int64_t)>& fn) {
  int workers = worker_count();
  if (workers <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::int64_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace kcsm
