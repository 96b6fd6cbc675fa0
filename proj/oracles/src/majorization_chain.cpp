#include <random>

#include "cse/oracles.hpp"

namespace cse::oracles {

std::vector<double> majorization_chain(std::span<const double> p, int steps, std::uint64_t seed) {
  std::vector<double> q(p.begin(), p.end());
  if (q.size() < 2) return q;
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
  std::uniform_real_distribution<double> share(0.1, 0.9);
  for (int step = 0; step < steps; ++step) {
    // Find a pair with a real gap; give up after a bounded number of tries
    // (e.g. for a uniform vector no transfer exists).
    bool moved = false;
    for (int attempt = 0; attempt < 64 && !moved; ++attempt) {
      std::size_t i = pick(gen);
      std::size_t j = pick(gen);
      if (q[i] < q[j]) std::swap(i, j);
      const double gap = q[i] - q[j];
      if (i == j || gap <= 1e-9) continue;
      // Moving less than half the gap keeps q[i] >= q[j]: no crossing.
      const double eps = share(gen) * gap / 2.0;
      q[i] -= eps;
      q[j] += eps;
      moved = true;
    }
    if (!moved) break;
  }
  return q;
}

}  // namespace cse::oracles
