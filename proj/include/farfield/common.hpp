// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace farfield {

using cd = std::complex<double>;

// Thrown for malformed configs, bad shapes, invalid arguments.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a computation cannot proceed (singular systems, non-finite
// input, zero-power references).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> n{0};  // 0 = hardware concurrency
  return n;
}
}  // namespace detail

inline void set_max_threads(int n) { detail::max_threads_slot().store(n); }

inline int max_threads() {
  int n = detail::max_threads_slot().load();
  if (n > 0) return n;
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [begin, end). Work items must be independent; each
// thread gets a contiguous chunk so results land in preallocated slots
// identically regardless of the thread count.
template <typename Fn>
void parallel_for(long begin, long end, Fn&& fn) {
  long n = end - begin;
  if (n <= 0) return;
  int threads = static_cast<int>(std::min<long>(max_threads(), n));
  if (threads <= 1) {
    for (long i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  long chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    long lo = begin + w * chunk;
    long hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (long i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Deterministic RNG. Normal deviates use Box-Muller on top of mt19937_64 so
// the stream does not depend on the standard library's distribution
// implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  double uniform() {  // [0, 1)
    return (gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  cd complex_normal() {  // circularly symmetric, unit variance
    return cd(normal(), normal()) * M_SQRT1_2;
  }

  std::uint64_t next_u64() { return gen_(); }

  // Independent stream for work item i (per-frequency EM etc.); keeps
  // parallel runs deterministic.
  Rng fork(std::uint64_t i) const {
    return Rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace farfield
