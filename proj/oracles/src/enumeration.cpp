#include <algorithm>
#include <cmath>

#include "cse/error.hpp"
#include "cse/oracles.hpp"

namespace cse::oracles {
namespace {

constexpr double kTieRelTol = 1e-12;

bool reaches(double value, double observed) {
  return value >= observed - kTieRelTol * std::max(1.0, std::abs(observed));
}

void check_k(std::size_t k, std::size_t min_k) {
  if (k < min_k) throw Error(ErrorKind::insufficient_data, "too few pairs for enumeration");
  if (k > 20) throw Error(ErrorKind::invalid_argument, "exhaustive enumeration limited to K <= 20");
}

// Two-pass paired t on the valid entries of column b under sign mask `mask`.
double column_t(const Matrix& diffs, std::size_t b, unsigned long mask) {
  std::vector<double> v;
  for (std::size_t k = 0; k < diffs.rows(); ++k) {
    const double d = diffs(k, b);
    if (std::isnan(d)) continue;
    v.push_back(((mask >> k) & 1UL) ? -d : d);
  }
  if (v.size() < 3) return std::nan("");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(v.size() - 1);
  if (!(var > 0.0)) return std::nan("");
  return mean / std::sqrt(var / static_cast<double>(v.size()));
}

double largest_mass(const Matrix& diffs, unsigned long mask, double threshold) {
  double best = 0.0;
  double run = 0.0;
  for (std::size_t b = 0; b < diffs.cols(); ++b) {
    const double t = column_t(diffs, b, mask);
    if (t > threshold) {
      run += t;
      best = std::max(best, run);
    } else {
      run = 0.0;
    }
  }
  return best;
}

}  // namespace

double exhaustive_signflip_p(std::span<const double> diffs) {
  const std::size_t k = diffs.size();
  check_k(k, 2);
  double observed = 0.0;
  for (double d : diffs) observed += d;
  observed /= static_cast<double>(k);
  const unsigned long n = 1UL << k;
  unsigned long hits = 0;
  for (unsigned long mask = 0; mask < n; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += ((mask >> i) & 1UL) ? -diffs[i] : diffs[i];
    if (reaches(s / static_cast<double>(k), observed)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

ExhaustiveCluster exhaustive_cluster_p(const Matrix& diffs, double threshold) {
  check_k(diffs.rows(), 3);
  ExhaustiveCluster out;
  out.observed_max_mass = largest_mass(diffs, 0UL, threshold);
  const unsigned long n = 1UL << diffs.rows();
  unsigned long hits = 0;
  for (unsigned long mask = 0; mask < n; ++mask)
    if (reaches(largest_mass(diffs, mask, threshold), out.observed_max_mass)) ++hits;
  out.p_cluster = static_cast<double>(hits) / static_cast<double>(n);
  return out;
}

double shannon_entropy_sorted(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h += x * std::log(1.0 / x);
  return h;
}

double ks_uniform_statistic(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace cse::oracles
