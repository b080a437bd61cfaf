#include "promptopt/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "promptopt/hashing.hpp"

namespace promptopt {

SeededRng::SeededRng(std::uint64_t seed, std::string stream_label)
    : seed_(seed), label_(std::move(stream_label)) {
  engine_.seed(hash_combine(splitmix64(seed), fnv1a64(label_)));
}

std::uint64_t SeededRng::next_u64() { return engine_(); }

std::uint64_t SeededRng::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  // Rejection sampling on the top of the range removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  return lo + static_cast<std::int64_t>(uniform_below(span));
}

double SeededRng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededRng::normal(double mean, double stddev) {
  if (stddev == 0.0) return mean;
  // Box-Muller; one draw per call keeps the stream position easy to reason about.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

bool SeededRng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01() < p;
}

int SeededRng::binomial(int trials, double p) {
  int hits = 0;
  for (int i = 0; i < trials; ++i) hits += bernoulli(p) ? 1 : 0;
  return hits;
}

std::vector<std::size_t> SeededRng::sample_indices(std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("sample_indices: k exceeds population");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::string SeededRng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void SeededRng::restore(std::string_view state) {
  std::istringstream is{std::string(state)};
  is >> engine_;
  if (!is) throw std::invalid_argument("SeededRng::restore: malformed engine state");
}

SeededRng derive_rng(std::uint64_t seed, std::string_view stream_label) {
  return SeededRng(seed, std::string(stream_label));
}

}  // namespace promptopt
