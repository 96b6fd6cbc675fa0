#include "cse/rng.hpp"

namespace cse::rng {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(state);
  return splitmix64(state);
}

void SignFlipper::draw(std::span<double> signs) {
  std::uint64_t bits = 0;
  int left = 0;
  for (double& s : signs) {
    if (left == 0) {
      bits = engine_();
      left = 64;
    }
    s = (bits & 1U) ? -1.0 : 1.0;
    bits >>= 1;
    --left;
  }
}

}  // namespace cse::rng
