#ifndef FLAPFOIL_SEEDING_HPP_
#define FLAPFOIL_SEEDING_HPP_

#include <cstdint>

namespace flapfoil {

// splitmix64 finaliser; used to derive independent stream seeds from one
// master seed so that runs never share an rng sequence by accident.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ stream) ^ index);
}

// Stream tags.
inline constexpr std::uint64_t kStreamEnv = 0x656e76;        // "env"
inline constexpr std::uint64_t kStreamAction = 0x616374;     // "act"
inline constexpr std::uint64_t kStreamInit = 0x696e6974;     // "init"
inline constexpr std::uint64_t kStreamShuffle = 0x73687566;  // "shuf"
inline constexpr std::uint64_t kStreamSweep = 0x7377656570;   // "sweep"
inline constexpr std::uint64_t kStreamMismatch = 0x6d69736d;  // "mism"

}  // namespace flapfoil

#endif  // FLAPFOIL_SEEDING_HPP_
