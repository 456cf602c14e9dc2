#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qoe {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over bytes. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for a (parent, tag...) path. Order of tags matters, order of
// calls does not, so work keyed this way is independent of iteration order.
template <typename... Tags>
constexpr std::uint64_t derive_seed(std::uint64_t parent, Tags... tags) {
  std::uint64_t s = mix64(parent);
  ((s = mix64(s ^ static_cast<std::uint64_t>(tags))), ...);
  return s;
}

inline std::uint64_t tag_of(std::string_view name) { return fnv1a64(name); }

}  // namespace qoe
