#ifndef RESMIA_RANDOM_H_
#define RESMIA_RANDOM_H_

#include <cstdint>
#include <initializer_list>

namespace resmia {

// splitmix64 finaliser.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic sub-seed for a (master, tag...) tuple.
constexpr std::uint64_t DeriveSeed(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = Mix64(master);
  for (std::uint64_t t : tags) s = Mix64(s ^ Mix64(t));
  return s;
}

// Stream tags so unrelated consumers of one master seed never collide.
namespace seed_tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kLocalTrain = 3;
inline constexpr std::uint64_t kEvalSet = 4;
inline constexpr std::uint64_t kTemplates = 5;
inline constexpr std::uint64_t kSamples = 6;
inline constexpr std::uint64_t kSubset = 7;
}  // namespace seed_tag

}  // namespace resmia

#endif  // RESMIA_RANDOM_H_
