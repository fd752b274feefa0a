#pragma once

#include <cstdint>
#include <random>

namespace dynaweight {

// splitmix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed plus stream ids.
// Every random draw in a run comes from a seed built this way, so results
// do not depend on scheduling or worker count.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t substream = 0) {
  std::uint64_t s = mix64(base ^ 0x517cc1b727220a95ULL);
  s = mix64(s ^ stream);
  return mix64(s ^ substream);
}

// Stream ids for derive_seed. Keep values stable; they are part of the
// reproducibility contract.
namespace seed_stream {
inline constexpr std::uint64_t kInit = 1;       // model initialization
inline constexpr std::uint64_t kBatch = 2;      // per-server per-epoch shuffles
inline constexpr std::uint64_t kPartition = 3;  // data partitioning
}  // namespace seed_stream

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace dynaweight
