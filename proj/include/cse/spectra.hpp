#pragma once

#include <span>
#include <string>
#include <vector>

#include "cse/contrast.hpp"
#include "cse/matrix.hpp"
#include "cse/trajstore.hpp"
#include "cse/wavelet.hpp"

// Conditional scale distributions and their entropies, layer-resolved
// entropy differences, majorization, and supporting energy metrics.
// Undefined values (zero energy) are NaN throughout.
namespace cse::spectra {

enum class EntropyKind { shannon, renyi2 };
enum class LogBase { natural, base2 };

std::string_view to_string(EntropyKind kind);
std::string_view to_string(LogBase base);
EntropyKind parse_entropy_kind(std::string_view text);
LogBase parse_log_base(std::string_view text);

struct ScaleDistribution {
  int b = 0;
  std::vector<double> p;
};

// p_j = z_j^2 / |z|^2. Throws undefined_distribution for z = 0.
ScaleDistribution scale_distribution(std::span<const double> z, int b);

// Shannon: -sum p log p (0 log 0 = 0). Renyi-2: -log sum p^2.
double entropy(std::span<const double> p, EntropyKind kind, LogBase base);
double cse(const ScaleDistribution& dist, EntropyKind kind, LogBase base);

struct EntropyProfile {
  std::vector<double> H;  // one per position, NaN where undefined
  EntropyKind kind = EntropyKind::shannon;
  LogBase base = LogBase::natural;

  std::vector<int> undefined_positions() const;
};

// H[b] = cse(scale_distribution(phi_b delta + s(0) const_response_b)).
EntropyProfile entropy_profile(const contrast::ProjectedSignal& s,
                               std::span<const wavelet::ResponseOperator> ops, EntropyKind kind,
                               LogBase base);

struct DeltaHProfile {
  std::vector<std::string> pair_ids;
  Matrix per_pair;                   // K x (L+1), metaphor minus literal, NaN where undefined
  std::vector<double> mean_profile;  // mean over defined pairs per position
  std::vector<int> n_defined;        // defined pairs per position
};

DeltaHProfile delta_h(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                      std::span<const wavelet::ResponseOperator> ops, EntropyKind kind, LogBase base);

DeltaHProfile delta_h(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                      const wavelet::WaveletConfig& cfg, EntropyKind kind, LogBase base,
                      unsigned threads = 1);

enum class Majorization { p_majorized_by_q, q_majorized_by_p, equal_up_to_permutation, incomparable };

std::string_view to_string(Majorization m);

inline constexpr double kMajorizationTol = 1e-12;

// Sorted partial-sum comparison; ties within tolerance satisfy the inequality.
Majorization majorizes(std::span<const double> p, std::span<const double> q);

// Scalogram assembled column by column from response operators.
wavelet::Scalogram scalogram_from_operators(const contrast::ProjectedSignal& s,
                                            std::span<const wavelet::ResponseOperator> ops);

// Supporting metrics. H_W and H(q) are artifact definitions:
//   cwt_energy: sum of W^2 over the scalogram
//   H_W:        Shannon entropy of the position-summed scale energies
//   H(q):       Shannon entropy of q_l = |Delta_l|^2 / sum |Delta_l'|^2 over full-d updates
struct AuxRecord {
  std::string pair_id;
  double cwt_energy_met = 0.0;
  double cwt_energy_lit = 0.0;
  double H_W_met = 0.0;
  double H_W_lit = 0.0;
  double Hq_met = 0.0;
  double Hq_lit = 0.0;
};

double wavelet_entropy(const wavelet::Scalogram& sc);
double update_energy_entropy(const trajstore::HiddenTrajectory& t);

std::vector<AuxRecord> aux_metrics(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                                   std::span<const wavelet::ResponseOperator> ops);

}  // namespace cse::spectra
