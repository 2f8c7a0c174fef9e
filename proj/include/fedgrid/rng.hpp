#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedgrid {

using Rng = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One master seed fans out to named child streams, so changing how one
// component consumes randomness does not perturb the draws seen by another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ULL ^ mix64(master);
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return mix64(h ^ mix64(index + 0x51ed2701ULL));
}

}  // namespace fedgrid
