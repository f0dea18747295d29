#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace vadkit {

inline constexpr const char* kToolVersion = "0.1.0";

// Input files that cannot be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that parse but violate a documented contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// splitmix64 (Vigna, public domain). Statistically solid and trivially
// portable; every random stream in this project is built from it so that
// outputs are bit-identical across platforms and schedules.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derive a child stream seed from (seed, string tag, index). Used wherever a
// per-video or per-segment stream is needed, so parallel scheduling cannot
// change outputs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return mix64(mix64(seed ^ fnv1a64(tag)) ^ index);
}

// Deterministic RNG stream; identical sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1), 53 bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::logic_error("Rng::next_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller. Consumes exactly two uniforms per call,
  // so the stream position never depends on call history.
  double next_gaussian() {
    double u1 = next_unit();
    while (u1 == 0.0) u1 = next_unit();
    const double u2 = next_unit();
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t state_;
};

// floor/ceil-free rounding helpers for non-negative arguments.
inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

inline std::int64_t round_half_even(double x) {
  const double f = std::floor(x);
  const double frac = x - f;
  const auto lo = static_cast<std::int64_t>(f);
  if (frac > 0.5) return lo + 1;
  if (frac < 0.5) return lo;
  return (lo % 2 == 0) ? lo : lo + 1;
}

// Bounded worker pool over [0, n). fn(i) must only touch state owned by
// index i; results keyed by index stay deterministic under any schedule.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace vadkit
