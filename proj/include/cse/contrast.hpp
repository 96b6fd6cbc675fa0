#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cse/stats.hpp"
#include "cse/trajstore.hpp"

// Normalized mean-difference contrast direction, projection of trajectories
// onto it, and the direction validation checks.
namespace cse::contrast {

struct ContrastDirection {
  std::vector<double> v;  // unit L2 norm, length d
  std::vector<std::string> source_pair_ids;
  trajstore::ModelGeometry geometry;
};

// s[l] = v . x_l  (L+1 values), delta[l] = v . (x_{l+1} - x_l)  (L values).
struct ProjectedSignal {
  std::vector<double> s;
  std::vector<double> delta;

  std::size_t layers() const noexcept { return delta.size(); }
};

struct SeparationReport {
  struct Entry {
    std::string pair_id;
    double mean_diff = 0.0;  // layer mean of delta_met - delta_lit
  };
  std::vector<Entry> per_pair;
  int n_positive = 0;
  double sign_test_p = 1.0;
};

struct HoldOut {
  std::string held_out_pair_id;
  int mean_diff_sign = 0;  // +1 or -1
  double mean_diff = 0.0;
};

// Sum over pairs and layers of (delta_met - delta_lit), divided by its norm.
ContrastDirection estimate_direction(const trajstore::PairSet& ps);

ProjectedSignal project(const trajstore::HiddenTrajectory& t, const ContrastDirection& dir);

// Signal with s(0) = s0 and increments `delta`.
ProjectedSignal signal_from_updates(double s0, std::vector<double> delta);

// Mean over layers of the projected update difference (metaphor minus literal).
double mean_projected_difference(const trajstore::MinimalPair& pair, const ContrastDirection& dir);

SeparationReport projection_separation(const trajstore::PairSet& ps, const ContrastDirection& dir,
                                       const stats::TestConfig& cfg);

// Folds run on `threads` workers; output is in pair order regardless.
std::vector<HoldOut> leave_one_out(const trajstore::PairSet& ps, unsigned threads = 1);

double direction_similarity(const ContrastDirection& a, const ContrastDirection& b);

// JSON {"geometry", "source_pair_ids", "v_b64"} with v as float64 little-endian.
void save_direction(const ContrastDirection& dir, const std::filesystem::path& path);
ContrastDirection load_direction(const std::filesystem::path& path);

}  // namespace cse::contrast
