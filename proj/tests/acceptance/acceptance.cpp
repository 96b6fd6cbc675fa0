// Acceptance gate. Prints one PASS/FAIL line per criterion; with a criterion
// name as argument only that one runs. Exit status is nonzero when any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "cse/oracles.hpp"
#include "cse/pipeline.hpp"
#include "cse/rng.hpp"
#include "cse/spectra.hpp"
#include "cse/stats.hpp"
#include "cse/theorems.hpp"
#include "cse/wavelet.hpp"

using namespace cse;

namespace {

// Tolerances and budgets.
constexpr double kFidelityRelTol = 1e-8;
constexpr double kOracleAbsTol = 1e-13;
constexpr double kConstResponseRelTol = 0.01;
constexpr double kOperatorTol = 1e-10;
constexpr double kBinomialSE = 3.0;
constexpr double kKsCritical1pct = 1.628;  // sqrt(n) * D at the 1% level
constexpr double kNullEmptyLo = 0.93;
constexpr double kNullEmptyHi = 0.97;
constexpr double kPowerRate = 0.95;
constexpr double kTheoremBudgetS = 60.0;
constexpr double kFidelityBudgetS = 300.0;
constexpr double kStatsBudgetS = 600.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

unsigned worker_count() { return std::max(1U, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double binomial_band(double p, int n) { return kBinomialSE * std::sqrt(p * (1.0 - p) / n) + 1.0 / (n + 1.0); }

contrast::ProjectedSignal random_signal(std::size_t layers, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> delta(layers);
  for (double& d : delta) d = n(gen);
  return contrast::signal_from_updates(n(gen), std::move(delta));
}

std::string property_summary(const theorems::SuiteReport& r, std::string_view prefix, bool& ok) {
  std::ostringstream out;
  for (const auto& p : r.properties) {
    if (p.name.rfind(prefix, 0) != 0) continue;
    ok = ok && p.passed();
    out << " [" << p.name << " " << (p.checks - p.failures) << "/" << p.checks << "]";
  }
  return out.str();
}

Outcome theorem1() {
  theorems::SuiteOptions opts;
  opts.chain_pairs = 0;
  const auto r = theorems::run_suite(opts);
  bool ok = r.random_deltas >= 1000;
  std::string detail = std::to_string(r.random_deltas) + " random update vectors, L in {4,12,24};";
  detail += property_summary(r, "T1", ok);
  ok = ok && r.seconds < kTheoremBudgetS;
  detail += "; " + fmt("%.2f s", r.seconds);
  return {ok, detail};
}

Outcome theorem2() {
  theorems::SuiteOptions opts;
  opts.layer_counts.clear();
  opts.chain_pairs = 1000;
  const auto r = theorems::run_suite(opts);
  bool ok = true;
  std::string detail = "1000 Robin-Hood chains;" + property_summary(r, "T2", ok);
  detail += property_summary(r, "Remark", ok);
  detail += "; H(p) = " + fmt("%.3f", r.remark_H_p_bits) + " bits, H(q) = " + fmt("%.3f", r.remark_H_q_bits) +
            " bits, " + r.remark_relation;
  ok = ok && r.seconds < kTheoremBudgetS;
  detail += "; " + fmt("%.2f s", r.seconds);
  return {ok, detail};
}

Outcome wavelet_fidelity() {
  const auto t0 = Clock::now();
  wavelet::WaveletConfig cfg;
  std::mt19937_64 gen(2024);
  std::vector<contrast::ProjectedSignal> signals;
  for (int i = 0; i < 20; ++i) signals.push_back(random_signal(24, gen));

  // Signals are independent; each worker writes only its own slot.
  std::vector<double> worst(signals.size(), 0.0);
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(signals.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < signals.size(); i += workers) {
          const auto sc = wavelet::cwt(signals[i], cfg);
          for (std::size_t j = 0; j < sc.scales(); ++j)
            for (std::size_t b = 0; b < sc.positions(); ++b) {
              const double o = oracles::cwt_quadrature_oracle(signals[i], j + 1.0, static_cast<double>(b),
                                                              cfg.omega0, false, kOracleAbsTol);
              worst[i] = std::max(worst[i], std::abs(sc.W(j, b) - o) / std::abs(o));
            }
        }
      });
  }
  double worst_rel = 0.0;
  for (double w : worst) worst_rel = std::max(worst_rel, w);

  const double psi_hat0 = std::sqrt(2.0 * std::acos(-1.0)) * std::exp(-12.5);
  const auto constant = contrast::signal_from_updates(1.0, std::vector<double>(24, 0.0));
  const auto csc = wavelet::cwt(constant, cfg);
  double worst_const = 0.0;
  for (std::size_t j = 0; j < csc.scales(); ++j) {
    const double expect = std::sqrt(j + 1.0) * psi_hat0;
    for (std::size_t b = 0; b < csc.positions(); ++b)
      worst_const = std::max(worst_const, std::abs(csc.W(j, b) - expect) / expect);
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_rel <= kFidelityRelTol && worst_const <= kConstResponseRelTol && secs < kFidelityBudgetS;
  return {ok, "20 signals x 625 cells, max relative error " + fmt("%.2e", worst_rel) + " (tol 1e-8); W(1,b) = " +
                  fmt("%.4g", csc.W(0, 12)) + ", constant response max deviation " + fmt("%.2e", worst_const) +
                  " (tol 1%); " + fmt("%.1f s", secs)};
}

Outcome operator_consistency() {
  std::mt19937_64 gen(77);
  const int lengths[] = {4, 12, 24};
  double worst = 0.0;
  int cases = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int L = lengths[rep % 3];
    const trajstore::ModelGeometry g{"acceptance", L, 1};
    wavelet::WaveletConfig cfg;
    const auto ops = wavelet::build_response_operators(g, cfg);
    const auto s = random_signal(static_cast<std::size_t>(L), gen);
    for (int b = 0; b <= L; ++b) {
      const auto direct = wavelet::cwt_column(s, b, cfg);
      const auto z = ops[static_cast<std::size_t>(b)].apply(s.delta, s.s.front());
      double scale = 1.0;
      for (double d : direct) scale = std::max(scale, std::abs(d));
      for (std::size_t j = 0; j < z.size(); ++j) worst = std::max(worst, std::abs(z[j] - direct[j]) / scale);
    }
    ++cases;
  }
  return {worst <= kOperatorTol, std::to_string(cases) + " random cases, all positions, max scaled deviation " +
                                     fmt("%.2e", worst) + " (tol 1e-10)"};
}

Outcome statistics_exactness() {
  const auto t0 = Clock::now();
  const unsigned threads = worker_count();
  bool ok = true;
  std::ostringstream detail;

  // Monte Carlo against exhaustive enumeration.
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd(0.0, 1.0);
  int mc_checks = 0;
  int mc_fail = 0;
  for (int K : {8, 10, 12}) {
    for (double shift : {0.2, 0.6}) {
      std::vector<double> diffs(static_cast<std::size_t>(K));
      for (double& d : diffs) d = nd(gen) + shift;
      stats::TestConfig tc;
      tc.seed = 1000 + static_cast<std::uint64_t>(K);
      tc.threads = threads;
      const auto r = stats::sign_flip_test(diffs, tc);
      const double exact = oracles::exhaustive_signflip_p(diffs);
      ++mc_checks;
      if (std::abs(r.p - exact) > binomial_band(exact, tc.n_permutations)) ++mc_fail;
    }
    Matrix diffs(static_cast<std::size_t>(K), 6);
    for (std::size_t k = 0; k < diffs.rows(); ++k)
      for (std::size_t b = 0; b < 6; ++b) diffs(k, b) = nd(gen) + (b >= 2 && b <= 4 ? 0.8 : 0.0);
    stats::TestConfig tc;
    tc.n_permutations = stats::kDefaultClusterPermutations;
    tc.seed = 2000 + static_cast<std::uint64_t>(K);
    tc.threads = threads;
    const auto r = stats::cluster_permutation(diffs, tc);
    const auto ex = oracles::exhaustive_cluster_p(diffs, r.threshold_stat);
    ++mc_checks;
    if (r.clusters.empty()) {
      ++mc_fail;
    } else {
      const stats::Cluster* best = &r.clusters.front();
      for (const auto& c : r.clusters)
        if (c.mass > best->mass) best = &c;
      if (std::abs(best->p_cluster - ex.p_cluster) > binomial_band(ex.p_cluster, tc.n_permutations)) ++mc_fail;
    }
  }
  ok = ok && mc_fail == 0;
  detail << "MC vs exhaustive (K=8,10,12): " << (mc_checks - mc_fail) << "/" << mc_checks << " within 3 SE";

  // Per-position p under a symmetric null.
  std::vector<double> pvals;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> diffs(25);
    for (double& d : diffs) d = nd(gen);
    stats::TestConfig tc;
    tc.seed = rng::derive_seed(31337, static_cast<std::uint64_t>(rep));
    tc.threads = threads;
    pvals.push_back(stats::sign_flip_test(diffs, tc).p);
  }
  const double ks = oracles::ks_uniform_statistic(pvals) * std::sqrt(1000.0);
  ok = ok && ks < kKsCritical1pct;
  detail << "; null p KS sqrt(n)D = " << fmt("%.3f", ks) << " (1% critical " << kKsCritical1pct << ")";

  // Active zones on null synthetic pair sets through the full delta H path.
  const trajstore::ModelGeometry geom{"synthetic", 24, 16};
  const auto ops = wavelet::build_response_operators(geom, wavelet::WaveletConfig{});
  int empty = 0;
  const int runs = 1000;
  for (int rep = 0; rep < runs; ++rep) {
    oracles::SyntheticSpec spec;
    spec.seed = 500000 + static_cast<std::uint64_t>(rep);
    const auto ps = oracles::gen_pairset(spec);
    const auto dir = contrast::estimate_direction(ps);
    const auto dh = spectra::delta_h(ps, dir, ops, spectra::EntropyKind::shannon, spectra::LogBase::natural);
    stats::TestConfig tc;
    tc.n_permutations = stats::kDefaultClusterPermutations;
    tc.seed = rng::derive_seed(4242, static_cast<std::uint64_t>(rep));
    tc.threads = threads;
    if (stats::cluster_permutation(dh.per_pair, tc).active_zone.empty()) ++empty;
  }
  const double rate = static_cast<double>(empty) / runs;
  ok = ok && rate >= kNullEmptyLo && rate <= kNullEmptyHi;
  detail << "; empty active zone in " << empty << "/" << runs << " null runs (target 95% +/- 2%)";

  const double secs = seconds_since(t0);
  ok = ok && secs < kStatsBudgetS;
  detail << "; " << fmt("%.1f s", secs);
  return {ok, detail.str()};
}

Outcome power_zone_recovery() {
  const unsigned threads = worker_count();
  const trajstore::ModelGeometry geom{"synthetic", 24, 16};
  const auto ops = wavelet::build_response_operators(geom, wavelet::WaveletConfig{});
  const int lo = 5;
  const int hi = 13;
  int positive = 0;
  int overlap = 0;
  int both = 0;
  double mean_in_zone_sum = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    oracles::SyntheticSpec spec;
    spec.effect = oracles::Effect::planted_spread_vs_concentrated;
    spec.seed = 1 + static_cast<std::uint64_t>(s);
    const auto ps = oracles::gen_pairset(spec);
    const auto dir = contrast::estimate_direction(ps);
    const auto dh = spectra::delta_h(ps, dir, ops, spectra::EntropyKind::shannon, spectra::LogBase::natural);
    double in_zone = 0.0;
    for (int b = lo; b <= hi; ++b) in_zone += dh.mean_profile[static_cast<std::size_t>(b)];
    in_zone /= (hi - lo + 1);
    mean_in_zone_sum += in_zone;
    stats::TestConfig tc;
    tc.n_permutations = stats::kDefaultClusterPermutations;
    tc.seed = rng::derive_seed(spec.seed, 2);
    tc.threads = threads;
    const auto cr = stats::cluster_permutation(dh.per_pair, tc);
    bool hit = false;
    for (int b : cr.active_zone) hit = hit || (b >= lo && b <= hi);
    positive += in_zone > 0.0 ? 1 : 0;
    overlap += hit ? 1 : 0;
    both += (in_zone > 0.0 && hit) ? 1 : 0;
  }
  const bool ok = both >= static_cast<int>(std::ceil(kPowerRate * seeds));
  std::ostringstream detail;
  detail << seeds << " planted seeds: positive in-zone mean dH in " << positive << ", active zone overlapping 5-13 in "
         << overlap << ", both in " << both << " (need >= 95); average in-zone mean dH "
         << fmt("%+.4f", mean_in_zone_sum / seeds);
  return {ok, detail.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const auto root = std::filesystem::temp_directory_path() / ("cse_acceptance_repro_" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  oracles::SyntheticSpec spec;
  spec.effect = oracles::Effect::planted_spread_vs_concentrated;
  spec.seed = 17;
  const auto ps = oracles::gen_pairset(spec);
  const unsigned thread_counts[] = {1, 1, 2, 8};
  std::vector<std::filesystem::path> dirs;
  for (std::size_t i = 0; i < std::size(thread_counts); ++i) {
    pipeline::RunConfig cfg;
    cfg.test.threads = thread_counts[i];
    const auto dir = root / ("run" + std::to_string(i));
    pipeline::write_report(pipeline::run_analysis(ps, cfg), dir);
    dirs.push_back(dir);
  }
  bool ok = true;
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dirs.front())) {
    const auto name = entry.path().filename();
    const auto ref = slurp(entry.path());
    ++files;
    for (std::size_t i = 1; i < dirs.size(); ++i) ok = ok && slurp(dirs[i] / name) == ref;
  }
  std::filesystem::remove_all(root);
  ok = ok && files >= 6;
  return {ok, std::to_string(files) + " report files compared across 4 runs (threads 1, 1, 2, 8), default permutation counts"};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"theorem1", theorem1},
      {"theorem2", theorem2},
      {"wavelet_fidelity", wavelet_fidelity},
      {"operator_consistency", operator_consistency},
      {"statistics_exactness", statistics_exactness},
      {"power_zone_recovery", power_zone_recovery},
      {"reproducibility", reproducibility},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
