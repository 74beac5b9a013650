#ifndef PREFEL_RNG_HPP
#define PREFEL_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace prefel {

using Rng = std::mt19937_64;

/// One step of the splitmix64 generator (Steele, Lea & Flood).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a path of
/// indices: seed_{k+1} = splitmix64(seed_k ^ splitmix64(index_k)).
/// Used to fan a master seed out to instances, iterations and purposes.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(parent);
  for (std::uint64_t i : path) s = splitmix64(s ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return s;
}

}  // namespace prefel

#endif  // PREFEL_RNG_HPP
