#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cse/contrast.hpp"
#include "cse/matrix.hpp"
#include "cse/trajstore.hpp"

// Brute-force reference implementations and synthetic data generators.
// Nothing here calls into the wavelet, spectra or stats numerics: the
// quadrature, statistics and entropy code below is written separately so a
// bug in the library cannot certify itself.
namespace cse::oracles {

enum class Effect { none, planted_spread_vs_concentrated, shared_direction };

std::string_view to_string(Effect e);
Effect parse_effect(std::string_view text);

struct SyntheticSpec {
  int layers = 24;
  int hidden = 16;
  int pairs = 25;
  Effect effect = Effect::none;
  std::vector<int> effect_zone = {5, 6, 7, 8, 9, 10, 11, 12, 13};
  double noise_scale = 0.1;
  double effect_strength = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Deterministic in `spec`. For `planted_spread_vs_concentrated` the metaphor
// updates along a hidden unit direction are spread over the zone layers
// while the literal update is concentrated at the zone centre, with equal
// total energy along that direction.
trajstore::PairSet gen_pairset(const SyntheticSpec& spec);

// Adaptive Simpson with Richardson correction on [lo, hi]. Throws
// not_converged when the evaluation budget is exhausted.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double abs_tol,
                        long max_evals = 20'000'000);

// W(a, b) of the piecewise-linear, constant-extended interpolant of `s`
// against the real Morlet wavelet, to absolute tolerance `abs_tol`.
double cwt_quadrature_oracle(const contrast::ProjectedSignal& s, double a, double b, double omega0 = 5.0,
                             bool algebraic = false, double abs_tol = 1e-12);

// Exact one-sided sign-flip p over all 2^K sign vectors, statistic = mean.
double exhaustive_signflip_p(std::span<const double> diffs);

struct ExhaustiveCluster {
  double observed_max_mass = 0.0;
  double p_cluster = 1.0;  // for the largest observed cluster
};

// Exact cluster p over all 2^K joint sign flips of the rows of `diffs`,
// thresholding per-position paired t-statistics at `threshold`.
ExhaustiveCluster exhaustive_cluster_p(const Matrix& diffs, double threshold);

// Applies `steps` random Robin-Hood transfers; the result is majorized by `p`.
std::vector<double> majorization_chain(std::span<const double> p, int steps, std::uint64_t seed);

// P(T >= t) for Student's t by direct quadrature of the density.
double t_upper_tail_quadrature(double t, double dof);

// Shannon entropy (natural log) summed in ascending order of p.
double shannon_entropy_sorted(std::vector<double> p);

// One-sample Kolmogorov-Smirnov statistic against Uniform(0, 1).
double ks_uniform_statistic(std::vector<double> sample);

}  // namespace cse::oracles
