#pragma once

#include <cstdint>
#include <vector>

#include "kcsm/common.hpp"

namespace kcsm {

/// Bit-packed 0-1 configuration over a fixed vertex set. Bit = 1 means
/// occupied (state 1), bit = 0 means vacant (state 0, the good state).
class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(int n, int fill = 0)
      : n_(n), w_((static_cast<std::size_t>(n) + 63) / 64, 0) {
    if (fill) {
      for (auto& w : w_) w = ~0ull;
      trim();
    }
  }

  static SpinConfig from_bits(int n, std::uint64_t bits) {
    SpinConfig c(n);
    if (!c.w_.empty()) c.w_[0] = bits;
    c.trim();
    return c;
  }

  int size() const { return n_; }

  int get(int x) const {
    return static_cast<int>((w_[static_cast<std::size_t>(x) >> 6] >> (x & 63)) & 1ull);
  }

  void set(int x, int v) {
    std::uint64_t mask = 1ull << (x & 63);
    if (v)
      w_[static_cast<std::size_t>(x) >> 6] |= mask;
    else
      w_[static_cast<std::size_t>(x) >> 6] &= ~mask;
  }

  bool all_zero() const {
    for (auto w : w_)
      if (w) return false;
    return true;
  }

  int count_ones() const {
    int c = 0;
    for (auto w : w_) c += __builtin_popcountll(w);
    return c;
  }

  int count_zeros() const { return n_ - count_ones(); }

  // partial order: a <= b iff every vacancy of a is a vacancy of b,
  // i.e. zeros(a) subset of zeros(b), i.e. ones(b) subset of ones(a)
  bool leq_good(const SpinConfig& b) const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      if ((b.w_[i] & ~w_[i]) != 0) return false;
    return true;
  }

  // zeros(a) subset of zeros(b)
  bool zeros_subset_of(const SpinConfig& b) const { return leq_good(b); }

  const std::vector<std::uint64_t>& words() const { return w_; }
  std::uint64_t low_bits() const { return w_.empty() ? 0 : w_[0]; }

  bool operator==(const SpinConfig& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const SpinConfig& o) const { return !(*this == o); }

 private:
  void trim() {
    int rem = n_ & 63;
    if (rem && !w_.empty()) w_.back() &= (1ull << rem) - 1;
  }

  int n_ = 0;
  std::vector<std::uint64_t> w_;
};

/// Per-site small-integer configuration for general finite state spaces.
using GeneralConfig = std::vector<std::uint8_t>;

}  // namespace kcsm
