#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cse/matrix.hpp"

// Sign-flip permutation tests, paired t-tests, Cohen's d and cluster-based
// permutation correction over layer positions.
//
// Missing values are encoded as NaN in every difference matrix and are
// dropped pairwise per position.
namespace cse::stats {

enum class Sided { one_sided_positive };

struct TestConfig {
  int n_permutations = 10000;
  double alpha = 0.05;
  Sided sided = Sided::one_sided_positive;
  std::uint64_t seed = 0x5eed5eedULL;
  // Worker threads for permutation batches. Results never depend on it.
  unsigned threads = 1;

  void validate() const;
};

inline constexpr int kDefaultPositionPermutations = 10000;
inline constexpr int kDefaultClusterPermutations = 5000;
// Permutations per independently seeded substream.
inline constexpr int kBatchSize = 256;

struct PositionTestResult {
  int b = 0;
  double statistic = 0.0;  // mean difference
  double p = 1.0;
  int n_positive_pairs = 0;
  int n_valid = 0;
};

// One-sided Monte Carlo sign-flip test on the mean of `diffs`.
// p = (1 + #{null >= observed}) / (1 + n_permutations).
PositionTestResult sign_flip_test(std::span<const double> diffs, const TestConfig& cfg, int b = 0);

struct TTestResult {
  double t = 0.0;
  double p_one_sided = 1.0;
  double cohens_d = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

TTestResult paired_t(std::span<const double> diffs);

// Upper tail P(T >= t) of Student's t with `dof` degrees of freedom.
double t_upper_tail(double t, double dof);
// t such that P(T >= t) = alpha.
double t_upper_quantile(double alpha, double dof);

struct Cluster {
  int start_b = 0;
  int end_b = 0;  // inclusive
  double mass = 0.0;
  double p_cluster = 1.0;
};

struct ClusterResult {
  std::vector<Cluster> clusters;      // in position order
  std::vector<int> active_zone;       // empty when nothing survives alpha
  double threshold_stat = 0.0;
  std::vector<double> statistics;     // observed t per position, NaN where excluded
  std::vector<int> excluded_positions;
  int n_pairs = 0;
  int n_permutations = 0;
};

// Maximal runs of positions with statistic > threshold; NaN breaks a run.
std::vector<Cluster> find_clusters(std::span<const double> statistics, double threshold);

// Paired t-statistic per position over the valid (non-NaN) entries of each
// column, after multiplying row k by signs[k]. NaN when fewer than 3 valid
// entries or zero variance.
std::vector<double> position_t_statistics(const Matrix& diffs, std::span<const double> signs);

ClusterResult cluster_permutation(const Matrix& diffs, const TestConfig& cfg);

struct EffectSizes {
  std::vector<double> per_position_d;  // NaN where undefined
  std::vector<int> undefined_positions;
  double zone_mean_d = 0.0;
  double zone_mean_delta = 0.0;
};

EffectSizes effect_sizes(const Matrix& diffs, std::span<const int> zone);

}  // namespace cse::stats
