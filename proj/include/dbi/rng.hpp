#pragma once

#include <cstdint>

namespace dbi {

// SplitMix64 finalizer. Bijective on 64-bit words; used both as the output
// function of the counter-based generator and for stream-key derivation.
std::uint64_t mix64(std::uint64_t x) noexcept;

enum class StreamTag : std::uint64_t {
  kAction = 1,
  kDelay = 2,
  kOutcome = 3,
  kGeneric = 4,
};

// Counter-based random stream: draw i is a pure function of (key, i).
// Streams derived from distinct (seed, replication, tag) triples share no
// state, so replications are reproducible independently of scheduling.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t key) noexcept : key_(key) {}

  static SplitRng derive(std::uint64_t base_seed, std::uint64_t replication,
                         StreamTag tag) noexcept;

  std::uint64_t next_u64() noexcept;

  // Uniform draw strictly inside (0, 1).
  double next_unit() noexcept;

  // Standard normal draw via the inverse-CDF transform (monotone in the
  // underlying uniform, one word consumed per draw).
  double next_normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace dbi
