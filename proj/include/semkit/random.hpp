#pragma once

#include <cstdint>
#include <string_view>

namespace semkit {

/// Identifies one reproducible random stream: a user seed plus labels for the
/// image index and the purpose ("shot", "read", "params", "mask", …).
struct Seed {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::string_view purpose = "default";
};

/// Counter-based generator. The key is derived from (seed, index, purpose) by
/// SplitMix64 chaining over the FNV-1a hash of the purpose; the n-th output is
/// splitmix64_finalize(key + (n + 1) · 0x9E3779B97F4A7C15). The stream is fully
/// determined by the key and counter, so draws never depend on scheduling.
class CounterRng {
 public:
  explicit CounterRng(const Seed& seed);
  CounterRng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0();
  /// Standard normal via Box–Muller; both variates of each pair are used.
  double normal();
  /// Poisson variate. Means below 30 use sequential inverse-CDF search; larger
  /// means use Hörmann's transformed rejection with squeeze (PTRS).
  std::uint64_t poisson(double mean);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace semkit
