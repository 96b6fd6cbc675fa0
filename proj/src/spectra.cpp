#include "cse/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cse/error.hpp"

namespace cse::spectra {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_in(double x, LogBase base) { return base == LogBase::natural ? std::log(x) : std::log2(x); }

void check_simplex(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= -kMajorizationTol)) throw Error(ErrorKind::invalid_argument, std::string(name) + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::invalid_argument, std::string(name) + " does not sum to 1");
}

// Entropy from energies, NaN for zero total.
double entropy_of_energies(std::span<const double> energies) {
  double total = 0.0;
  for (double e : energies) total += e;
  if (!(total > 0.0)) return kNaN;
  double h = 0.0;
  for (double e : energies)
    if (e > 0.0) {
      const double p = e / total;
      h -= p * std::log(p);
    }
  return h;
}

}  // namespace

std::string_view to_string(EntropyKind kind) { return kind == EntropyKind::shannon ? "shannon" : "renyi2"; }
std::string_view to_string(LogBase base) { return base == LogBase::natural ? "natural" : "base2"; }

EntropyKind parse_entropy_kind(std::string_view text) {
  if (text == "shannon") return EntropyKind::shannon;
  if (text == "renyi2") return EntropyKind::renyi2;
  throw Error(ErrorKind::invalid_argument, "unknown entropy kind '" + std::string(text) + "'");
}

LogBase parse_log_base(std::string_view text) {
  if (text == "natural") return LogBase::natural;
  if (text == "base2") return LogBase::base2;
  throw Error(ErrorKind::invalid_argument, "unknown log base '" + std::string(text) + "'");
}

std::string_view to_string(Majorization m) {
  switch (m) {
    case Majorization::p_majorized_by_q: return "p_majorized_by_q";
    case Majorization::q_majorized_by_p: return "q_majorized_by_p";
    case Majorization::equal_up_to_permutation: return "equal_up_to_permutation";
    case Majorization::incomparable: return "incomparable";
  }
  return "incomparable";
}

ScaleDistribution scale_distribution(std::span<const double> z, int b) {
  double norm_sq = 0.0;
  for (double v : z) norm_sq += v * v;
  if (!(norm_sq > 0.0) || !std::isfinite(norm_sq))
    throw Error(ErrorKind::undefined_distribution,
                "scale distribution at position " + std::to_string(b) + " is undefined for zero energy");
  ScaleDistribution d;
  d.b = b;
  d.p.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) d.p[j] = z[j] * z[j] / norm_sq;
  return d;
}

double entropy(std::span<const double> p, EntropyKind kind, LogBase base) {
  if (kind == EntropyKind::shannon) {
    double h = 0.0;
    for (double x : p)
      if (x > 0.0) h -= x * log_in(x, base);
    return std::max(h, 0.0);
  }
  double collision = 0.0;
  for (double x : p) collision += x * x;
  return std::max(-log_in(collision, base), 0.0);
}

double cse(const ScaleDistribution& dist, EntropyKind kind, LogBase base) { return entropy(dist.p, kind, base); }

std::vector<int> EntropyProfile::undefined_positions() const {
  std::vector<int> out;
  for (std::size_t b = 0; b < H.size(); ++b)
    if (std::isnan(H[b])) out.push_back(static_cast<int>(b));
  return out;
}

EntropyProfile entropy_profile(const contrast::ProjectedSignal& s, std::span<const wavelet::ResponseOperator> ops,
                               EntropyKind kind, LogBase base) {
  if (ops.size() != s.s.size())
    throw Error(ErrorKind::dimension_mismatch, "need one response operator per position 0..L");
  EntropyProfile prof;
  prof.kind = kind;
  prof.base = base;
  prof.H.assign(ops.size(), kNaN);
  for (std::size_t b = 0; b < ops.size(); ++b) {
    const auto z = ops[b].apply(s.delta, s.s.front());
    double norm_sq = 0.0;
    for (double v : z) norm_sq += v * v;
    if (!(norm_sq > 0.0)) continue;
    prof.H[b] = cse(scale_distribution(z, static_cast<int>(b)), kind, base);
  }
  return prof;
}

DeltaHProfile delta_h(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                      std::span<const wavelet::ResponseOperator> ops, EntropyKind kind, LogBase base) {
  const std::size_t n_pos = ps.geometry.positions();
  DeltaHProfile out;
  out.per_pair = Matrix(ps.pairs.size(), n_pos, kNaN);
  for (std::size_t k = 0; k < ps.pairs.size(); ++k) {
    const auto& p = ps.pairs[k];
    out.pair_ids.push_back(p.pair_id);
    const auto met = entropy_profile(contrast::project(p.metaphor, dir), ops, kind, base);
    const auto lit = entropy_profile(contrast::project(p.literal, dir), ops, kind, base);
    for (std::size_t b = 0; b < n_pos; ++b) out.per_pair(k, b) = met.H[b] - lit.H[b];
  }
  out.mean_profile.assign(n_pos, kNaN);
  out.n_defined.assign(n_pos, 0);
  for (std::size_t b = 0; b < n_pos; ++b) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < ps.pairs.size(); ++k)
      if (!std::isnan(out.per_pair(k, b))) {
        sum += out.per_pair(k, b);
        ++n;
      }
    out.n_defined[b] = n;
    if (n > 0) out.mean_profile[b] = sum / n;
  }
  return out;
}

DeltaHProfile delta_h(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                      const wavelet::WaveletConfig& cfg, EntropyKind kind, LogBase base, unsigned threads) {
  const auto ops = wavelet::build_response_operators(ps.geometry, cfg, threads);
  return delta_h(ps, dir, ops, kind, base);
}

Majorization majorizes(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorKind::dimension_mismatch, "majorization needs equal lengths");
  check_simplex(p, "p");
  check_simplex(q, "q");
  std::vector<double> ps(p.begin(), p.end());
  std::vector<double> qs(q.begin(), q.end());
  std::sort(ps.begin(), ps.end(), std::greater<>());
  std::sort(qs.begin(), qs.end(), std::greater<>());
  bool p_le_q = true;  // p majorized by q
  bool q_le_p = true;
  double sp = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k + 1 < ps.size(); ++k) {
    sp += ps[k];
    sq += qs[k];
    if (sp > sq + kMajorizationTol) p_le_q = false;
    if (sq > sp + kMajorizationTol) q_le_p = false;
  }
  if (p_le_q && q_le_p) return Majorization::equal_up_to_permutation;
  if (p_le_q) return Majorization::p_majorized_by_q;
  if (q_le_p) return Majorization::q_majorized_by_p;
  return Majorization::incomparable;
}

wavelet::Scalogram scalogram_from_operators(const contrast::ProjectedSignal& s,
                                            std::span<const wavelet::ResponseOperator> ops) {
  if (ops.size() != s.s.size())
    throw Error(ErrorKind::dimension_mismatch, "need one response operator per position 0..L");
  wavelet::Scalogram sc{Matrix(s.s.size(), s.s.size())};
  for (std::size_t b = 0; b < ops.size(); ++b) {
    const auto z = ops[b].apply(s.delta, s.s.front());
    for (std::size_t j = 0; j < z.size(); ++j) sc.W(j, b) = z[j];
  }
  return sc;
}

double wavelet_entropy(const wavelet::Scalogram& sc) {
  std::vector<double> per_scale(sc.scales(), 0.0);
  for (std::size_t j = 0; j < sc.scales(); ++j)
    for (std::size_t k = 0; k < sc.positions(); ++k) per_scale[j] += sc.energy(j, k);
  return entropy_of_energies(per_scale);
}

double update_energy_entropy(const trajstore::HiddenTrajectory& t) {
  const auto u = trajstore::compute_updates(t);
  std::vector<double> norms(u.deltas.rows(), 0.0);
  for (std::size_t l = 0; l < u.deltas.rows(); ++l)
    for (double v : u.deltas.row(l)) norms[l] += v * v;
  return entropy_of_energies(norms);
}

std::vector<AuxRecord> aux_metrics(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                                   std::span<const wavelet::ResponseOperator> ops) {
  auto energy = [](const wavelet::Scalogram& sc) {
    double e = 0.0;
    for (double w : sc.W.data()) e += w * w;
    return e;
  };
  std::vector<AuxRecord> out;
  for (const auto& p : ps.pairs) {
    const auto met = scalogram_from_operators(contrast::project(p.metaphor, dir), ops);
    const auto lit = scalogram_from_operators(contrast::project(p.literal, dir), ops);
    AuxRecord r;
    r.pair_id = p.pair_id;
    r.cwt_energy_met = energy(met);
    r.cwt_energy_lit = energy(lit);
    r.H_W_met = wavelet_entropy(met);
    r.H_W_lit = wavelet_entropy(lit);
    r.Hq_met = update_energy_entropy(p.metaphor);
    r.Hq_lit = update_energy_entropy(p.literal);
    out.push_back(r);
  }
  return out;
}

}  // namespace cse::spectra
