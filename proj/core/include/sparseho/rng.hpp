#pragma once

#include <cstdint>
#include <vector>

namespace sparseho {

// Counter-based generator: the k-th draw is splitmix64(seed, k). The
// stream is fully specified here (no std:: distributions), so datasets,
// splits and probe vectors are identical across compilers and platforms.
//
// Version tag "splitmix64-ctr/1". Changing any draw order or transform
// below is a breaking change to every stored seed.
class CounterRng {
 public:
  static constexpr const char* kVersion = "splitmix64-ctr/1";

  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; pairs are consumed in order.
  double normal();

  // Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<long> permutation(long n, CounterRng& rng);

}  // namespace sparseho
