#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace cse::rng {

// Recorded in every report next to the seed.
inline constexpr std::string_view kIdentity = "std::mt19937_64 substreams keyed by splitmix64(seed, stream)";

std::uint64_t splitmix64(std::uint64_t& state);

// Seed for an independent substream; a pure function of (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Draws sign vectors with each entry +1 or -1 with probability 1/2.
class SignFlipper {
 public:
  explicit SignFlipper(std::uint64_t seed) : engine_(seed) {}

  void draw(std::span<double> signs);

 private:
  std::mt19937_64 engine_;
};

}  // namespace cse::rng
