#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace daln {

/// Seeded random stream: std::mt19937_64 engine with explicitly coded
/// uniform/normal/shuffle transforms, so draws are bit-identical across
/// standard libraries (std distributions are implementation-defined).
/// Independent streams for distinct purposes are derived from one run seed
/// via for_purpose(), e.g. streams "init", "data", "shuffle/source".
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : engine_(seed) {}

  static RngStream for_purpose(uint64_t seed, std::string_view purpose);

  uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  int uniform_int(int n);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Fisher-Yates over indices [0, n).
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 64-bit mix used to derive purpose sub-seeds (splitmix64 finalizer).
uint64_t mix64(uint64_t x);

}  // namespace daln
