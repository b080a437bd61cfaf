#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace promptopt {

/// Deterministic random stream namespaced by a label.
///
/// The engine is mt19937_64, whose output sequence is fixed by the standard.
/// Distributions are implemented here rather than taken from <random> so that
/// a (seed, label, call sequence) triple reproduces the same values with any
/// standard library. A stream has a single owner; do not share one across
/// threads.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::string stream_label);

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& stream_label() const noexcept { return label_; }

  std::uint64_t next_u64();
  // Uniform on [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);
  // Uniform on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  int binomial(int trials, double p);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_below(i)]);
    }
  }

  // k distinct indices from [0, n) in random order (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

  // Engine state round-trip, used by checkpoints.
  std::string serialize() const;
  void restore(std::string_view state);

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

SeededRng derive_rng(std::uint64_t seed, std::string_view stream_label);

}  // namespace promptopt
