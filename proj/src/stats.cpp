#include "cse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "cse/error.hpp"
#include "cse/rng.hpp"

namespace cse::stats {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTieRelTol = 1e-12;

// Runs `body(batch_index, first_perm, count)` over every batch of the
// permutation budget, spreading batches over `threads` workers.
template <typename Body>
void for_each_batch(int n_permutations, unsigned threads, Body&& body) {
  const int n_batches = (n_permutations + kBatchSize - 1) / kBatchSize;
  auto run = [&](unsigned worker, unsigned stride) {
    for (int i = static_cast<int>(worker); i < n_batches; i += static_cast<int>(stride)) {
      const int first = i * kBatchSize;
      body(i, first, std::min(kBatchSize, n_permutations - first));
    }
  };
  const unsigned n_workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n_batches)));
  if (n_workers == 1) {
    run(0, 1);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(run, w, n_workers);
}

bool at_least(double null_value, double observed) {
  return null_value >= observed - kTieRelTol * std::max(1.0, std::abs(observed));
}

double max_cluster_mass(std::span<const double> statistics, double threshold) {
  double best = 0.0;
  double run = 0.0;
  bool in_run = false;
  for (double t : statistics) {
    if (!std::isnan(t) && t > threshold) {
      run = in_run ? run + t : t;
      in_run = true;
      best = std::max(best, run);
    } else {
      in_run = false;
    }
  }
  return best;
}

}  // namespace

void TestConfig::validate() const {
  if (n_permutations < 100) throw Error(ErrorKind::invalid_argument, "n_permutations must be >= 100");
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 0.5)");
}

PositionTestResult sign_flip_test(std::span<const double> diffs, const TestConfig& cfg, int b) {
  cfg.validate();
  const std::size_t k = diffs.size();
  if (k < 2) throw Error(ErrorKind::insufficient_data, "sign-flip test needs at least 2 differences");
  for (double d : diffs)
    if (!std::isfinite(d)) throw Error(ErrorKind::non_finite, "sign-flip test input must be finite");

  PositionTestResult r;
  r.b = b;
  r.n_valid = static_cast<int>(k);
  double sum = 0.0;
  for (double d : diffs) {
    sum += d;
    if (d > 0.0) ++r.n_positive_pairs;
  }
  r.statistic = sum / static_cast<double>(k);

  const int n_batches = (cfg.n_permutations + kBatchSize - 1) / kBatchSize;
  std::vector<long> exceed(static_cast<std::size_t>(n_batches), 0);
  for_each_batch(cfg.n_permutations, cfg.threads, [&](int batch, int, int count) {
    rng::SignFlipper flipper(rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(batch)));
    std::vector<double> signs(k);
    long hits = 0;
    for (int i = 0; i < count; ++i) {
      flipper.draw(signs);
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += signs[j] * diffs[j];
      if (at_least(s / static_cast<double>(k), r.statistic)) ++hits;
    }
    exceed[static_cast<std::size_t>(batch)] = hits;
  });
  long total = 0;
  for (long h : exceed) total += h;
  r.p = (1.0 + static_cast<double>(total)) / (1.0 + cfg.n_permutations);
  return r;
}

double t_upper_tail(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  // P(T >= t) = I_{dof/(dof+t^2)}(dof/2, 1/2) / 2 for t >= 0.
  const double x = dof / (dof + t * t);
  const double half_tail = 0.5 * boost::math::ibeta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double t_upper_quantile(double alpha, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

TTestResult paired_t(std::span<const double> diffs) {
  const std::size_t k = diffs.size();
  if (k < 3) throw Error(ErrorKind::insufficient_data, "paired t-test needs at least 3 differences");
  double sum = 0.0;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw Error(ErrorKind::non_finite, "paired t-test input must be finite");
    sum += d;
  }
  const double n = static_cast<double>(k);
  TTestResult r;
  r.mean = sum / n;
  double ss = 0.0;
  for (double d : diffs) ss += (d - r.mean) * (d - r.mean);
  r.sd = std::sqrt(ss / (n - 1.0));
  if (!(r.sd > 0.0)) throw Error(ErrorKind::zero_variance, "paired differences have zero variance");
  r.t = r.mean / (r.sd / std::sqrt(n));
  r.p_one_sided = t_upper_tail(r.t, n - 1.0);
  r.cohens_d = r.mean / r.sd;
  return r;
}

std::vector<Cluster> find_clusters(std::span<const double> statistics, double threshold) {
  std::vector<Cluster> out;
  for (std::size_t b = 0; b < statistics.size(); ++b) {
    const double t = statistics[b];
    if (std::isnan(t) || !(t > threshold)) continue;
    if (!out.empty() && out.back().end_b + 1 == static_cast<int>(b)) {
      out.back().end_b = static_cast<int>(b);
      out.back().mass += t;
    } else {
      out.push_back({static_cast<int>(b), static_cast<int>(b), t, 1.0});
    }
  }
  return out;
}

std::vector<double> position_t_statistics(const Matrix& diffs, std::span<const double> signs) {
  std::vector<double> out(diffs.cols(), kNaN);
  for (std::size_t b = 0; b < diffs.cols(); ++b) {
    double sum = 0.0;
    double sum_sq = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < diffs.rows(); ++k) {
      const double d = diffs(k, b);
      if (std::isnan(d)) continue;
      sum += signs[k] * d;
      sum_sq += d * d;
      ++n;
    }
    if (n < 3) continue;
    const double mean = sum / n;
    const double var = (sum_sq - n * mean * mean) / (n - 1);
    // Relative floor guards the cancellation in the one-pass variance.
    if (!(var > 1e-14 * sum_sq / n)) continue;
    out[b] = mean / std::sqrt(var / n);
  }
  return out;
}

ClusterResult cluster_permutation(const Matrix& diffs, const TestConfig& cfg) {
  cfg.validate();
  const std::size_t k = diffs.rows();
  if (k < 3) throw Error(ErrorKind::insufficient_data, "cluster permutation needs at least 3 pairs");

  ClusterResult r;
  r.n_pairs = static_cast<int>(k);
  r.n_permutations = cfg.n_permutations;
  bool any_valid = false;
  for (std::size_t b = 0; b < diffs.cols(); ++b) {
    int n = 0;
    for (std::size_t i = 0; i < k; ++i) n += std::isnan(diffs(i, b)) ? 0 : 1;
    if (n == 0) {
      std::ostringstream msg;
      msg << "position " << b << " has no valid differences";
      throw Error(ErrorKind::insufficient_data, msg.str());
    }
    if (n < 3) r.excluded_positions.push_back(static_cast<int>(b));
    else any_valid = true;
  }
  if (!any_valid) throw Error(ErrorKind::insufficient_data, "no position has 3 or more valid pairs");

  r.threshold_stat = t_upper_quantile(cfg.alpha, static_cast<double>(k) - 1.0);
  const std::vector<double> identity(k, 1.0);
  r.statistics = position_t_statistics(diffs, identity);
  r.clusters = find_clusters(r.statistics, r.threshold_stat);

  std::vector<double> null_max(static_cast<std::size_t>(cfg.n_permutations));
  for_each_batch(cfg.n_permutations, cfg.threads, [&](int batch, int first, int count) {
    rng::SignFlipper flipper(rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(batch)));
    std::vector<double> signs(k);
    for (int i = 0; i < count; ++i) {
      flipper.draw(signs);
      const auto t = position_t_statistics(diffs, signs);
      null_max[static_cast<std::size_t>(first + i)] = max_cluster_mass(t, r.threshold_stat);
    }
  });

  for (auto& c : r.clusters) {
    long hits = 0;
    for (double m : null_max) hits += at_least(m, c.mass) ? 1 : 0;
    c.p_cluster = (1.0 + static_cast<double>(hits)) / (1.0 + cfg.n_permutations);
  }
  const Cluster* best = nullptr;
  for (const auto& c : r.clusters)
    if (best == nullptr || c.mass > best->mass) best = &c;
  if (best != nullptr && best->p_cluster <= cfg.alpha)
    for (int b = best->start_b; b <= best->end_b; ++b) r.active_zone.push_back(b);
  return r;
}

EffectSizes effect_sizes(const Matrix& diffs, std::span<const int> zone) {
  if (zone.empty()) throw Error(ErrorKind::invalid_argument, "effect sizes need a non-empty zone");
  EffectSizes e;
  e.per_position_d.assign(diffs.cols(), kNaN);
  std::vector<double> means(diffs.cols(), kNaN);
  for (std::size_t b = 0; b < diffs.cols(); ++b) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < diffs.rows(); ++k)
      if (!std::isnan(diffs(k, b))) {
        sum += diffs(k, b);
        ++n;
      }
    if (n > 0) means[b] = sum / n;
    double ss = 0.0;
    for (std::size_t k = 0; k < diffs.rows(); ++k)
      if (!std::isnan(diffs(k, b))) ss += (diffs(k, b) - means[b]) * (diffs(k, b) - means[b]);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    if (sd > 0.0) e.per_position_d[b] = means[b] / sd;
    else e.undefined_positions.push_back(static_cast<int>(b));
  }

  double d_sum = 0.0;
  double delta_sum = 0.0;
  int d_count = 0;
  int delta_count = 0;
  for (int b : zone) {
    if (b < 0 || static_cast<std::size_t>(b) >= diffs.cols())
      throw Error(ErrorKind::out_of_range, "zone position outside the difference matrix");
    const auto ub = static_cast<std::size_t>(b);
    if (!std::isnan(e.per_position_d[ub])) {
      d_sum += e.per_position_d[ub];
      ++d_count;
    }
    if (!std::isnan(means[ub])) {
      delta_sum += means[ub];
      ++delta_count;
    }
  }
  if (d_count == 0) throw Error(ErrorKind::zero_variance, "no zone position has a defined effect size");
  e.zone_mean_d = d_sum / d_count;
  e.zone_mean_delta = delta_count > 0 ? delta_sum / delta_count : kNaN;
  return e;
}

}  // namespace cse::stats
