#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace iois {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream seed from a master seed and a tuple of stream coordinates,
// e.g. derive_seed(seed, {kSynthesisStream, epoch, chain}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  return Rng(derive_seed(master, coords));
}

// Stream tags so that unrelated consumers of one master seed never share draws.
enum StreamTag : std::uint64_t {
  kDataStream = 1,
  kSplitStream = 2,
  kClassifierInitStream = 3,
  kShuffleStream = 4,
  kDenoiserInitStream = 5,
  kDenoiserTrainStream = 6,
  kSynthesisStream = 7,
  kNoiseAugmentStream = 8,
  kSampleCommandStream = 9,
};

}  // namespace iois
