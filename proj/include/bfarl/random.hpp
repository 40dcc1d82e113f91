#pragma once

#include <cstdint>
#include <random>

namespace bfarl {

// Every stochastic operation owns one of these, seeded explicitly.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return mix_seed(mix_seed(parent) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b) {
  return derive_seed(derive_seed(parent, a), b);
}

// Named streams so call sites don't collide on magic numbers.
namespace seed_stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t batches = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t selection = 4;
inline constexpr std::uint64_t label_flip = 5;
inline constexpr std::uint64_t synthetic = 6;
inline constexpr std::uint64_t train = 7;
}  // namespace seed_stream

}  // namespace bfarl
