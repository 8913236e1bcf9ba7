#include "dbi/rng.hpp"

#include "dbi/special.hpp"

namespace dbi {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SplitRng SplitRng::derive(std::uint64_t base_seed, std::uint64_t replication,
                          StreamTag tag) noexcept {
  std::uint64_t key = mix64(base_seed + kGolden);
  key = mix64(key ^ (replication * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
  key = mix64(key ^ (static_cast<std::uint64_t>(tag) * 0xbf58476d1ce4e5b9ULL + kGolden));
  return SplitRng(key);
}

std::uint64_t SplitRng::next_u64() noexcept {
  return mix64(key_ + kGolden * ++counter_);
}

double SplitRng::next_unit() noexcept {
  // 53 random bits centered in the cell: never exactly 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SplitRng::next_normal() noexcept {
  return inverse_normal_cdf(next_unit());
}

}  // namespace dbi
