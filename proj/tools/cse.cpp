#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cse/contrast.hpp"
#include "cse/error.hpp"
#include "cse/oracles.hpp"
#include "cse/pipeline.hpp"
#include "cse/theorems.hpp"
#include "cse/trajstore.hpp"
#include "cse/wavelet.hpp"

namespace fs = std::filesystem;
using namespace cse;

namespace {

constexpr const char* kOutputDirEnv = "CSE_OUTPUT_DIR";

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : fs::path(".");
}

wavelet::Mode parse_mode(const std::string& text) {
  if (text == "faithful") return wavelet::Mode::faithful;
  if (text == "algebraic") return wavelet::Mode::algebraic;
  throw Error(ErrorKind::invalid_argument, "unknown wavelet mode '" + text + "'");
}

// Parses "5-13" or "5,6,7" into a list of positions.
std::vector<int> parse_zone(const std::string& text) {
  std::vector<int> zone;
  try {
    if (const auto dash = text.find('-'); dash != std::string::npos) {
      const int lo = std::stoi(text.substr(0, dash));
      const int hi = std::stoi(text.substr(dash + 1));
      for (int b = lo; b <= hi; ++b) zone.push_back(b);
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) zone.push_back(std::stoi(item));
    }
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument, "cannot parse zone '" + text + "'");
  }
  return zone;
}

// Flags that mirror RunConfig. Values given on the command line override
// those loaded from --config.
struct RunFlags {
  std::string config;
  std::string pairset;
  std::string direction;
  double omega0 = 0;
  int quadrature_order = 0;
  double tail_halfwidth = 0;
  std::string mode;
  std::string entropy;
  std::string log_base;
  int permutations = 0;
  int cluster_permutations = 0;
  double alpha = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--pairset", pairset, "pair-set manifest");
    app.add_option("--direction", direction, "direction file (estimated from the pair set when absent)");
    app.add_option("--omega0", omega0, "Morlet centre frequency");
    app.add_option("--quadrature-order", quadrature_order, "Gauss-Legendre nodes per unit segment");
    app.add_option("--tail-halfwidth", tail_halfwidth, "integration half-width in multiples of the scale");
    app.add_option("--mode", mode, "faithful or algebraic");
    app.add_option("--entropy", entropy, "shannon or renyi2");
    app.add_option("--log-base", log_base, "natural or base2");
    app.add_option("--permutations", permutations, "sign flips per position test");
    app.add_option("--cluster-permutations", cluster_permutations, "joint sign flips for cluster correction");
    app.add_option("--alpha", alpha, "significance level");
    app.add_option("--seed", seed, "top-level seed");
    app.add_option("--threads", threads, "worker threads (results do not depend on it)");
    app.add_option("--out", out, std::string("output directory (default $") + kOutputDirEnv + " or .)");
  }

  pipeline::RunConfig build(const CLI::App& app) const {
    pipeline::RunConfig cfg;
    cfg.test.n_permutations = stats::kDefaultPositionPermutations;
    cfg.output_dir = default_output_dir();
    if (app.count("--config")) cfg = pipeline::load_run_config(config);
    if (app.count("--pairset")) cfg.pairset_path = pairset;
    if (app.count("--direction")) cfg.direction_path = fs::path(direction);
    if (app.count("--omega0")) cfg.wavelet.omega0 = omega0;
    if (app.count("--quadrature-order")) cfg.wavelet.quadrature_order = quadrature_order;
    if (app.count("--tail-halfwidth")) cfg.wavelet.tail_halfwidth = tail_halfwidth;
    if (app.count("--mode")) cfg.wavelet.mode = parse_mode(mode);
    if (app.count("--entropy")) cfg.entropy_kind = spectra::parse_entropy_kind(entropy);
    if (app.count("--log-base")) cfg.log_base = spectra::parse_log_base(log_base);
    if (app.count("--permutations")) cfg.test.n_permutations = permutations;
    if (app.count("--cluster-permutations")) cfg.cluster_permutations = cluster_permutations;
    if (app.count("--alpha")) cfg.test.alpha = alpha;
    if (app.count("--seed")) cfg.test.seed = seed;
    if (app.count("--threads")) cfg.test.threads = threads;
    if (app.count("--out")) cfg.output_dir = out;
    if (cfg.pairset_path.empty()) throw Error(ErrorKind::invalid_argument, "no pair set given (--pairset or config)");
    cfg.validate();
    return cfg;
  }
};

contrast::ContrastDirection direction_for(const trajstore::PairSet& ps, const std::string& path) {
  return path.empty() ? contrast::estimate_direction(ps) : contrast::load_direction(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional scale entropy analysis of residual trajectories"};
  app.require_subcommand(1);

  // estimate-direction
  auto* est = app.add_subcommand("estimate-direction", "estimate the contrast direction of a pair set");
  std::string est_pairset;
  std::string est_out;
  est->add_option("--pairset", est_pairset, "pair-set manifest")->required();
  est->add_option("--out", est_out, "direction file (default <output dir>/direction.json)");

  // analyze
  auto* ana = app.add_subcommand("analyze", "run the full analysis and write reports");
  RunFlags run_flags;
  run_flags.attach(*ana);

  // validate
  auto* val = app.add_subcommand("validate", "projection separation, leave-one-out and direction similarity");
  std::string val_pairset, val_direction, val_compare, val_out;
  std::uint64_t val_seed = stats::TestConfig{}.seed;
  int val_permutations = stats::kDefaultPositionPermutations;
  unsigned val_threads = 1;
  val->add_option("--pairset", val_pairset, "pair-set manifest")->required();
  val->add_option("--direction", val_direction, "direction file (estimated from the pair set when absent)");
  val->add_option("--compare", val_compare, "second direction file for the similarity check");
  val->add_option("--seed", val_seed, "top-level seed");
  val->add_option("--permutations", val_permutations, "sign flips for the separation test");
  val->add_option("--threads", val_threads, "worker threads");
  val->add_option("--out", val_out, "write the JSON validation report here");

  // theorems
  auto* thm = app.add_subcommand("theorems", "run the theorem property battery");
  theorems::SuiteOptions thm_opts;
  thm->add_option("--seed", thm_opts.seed, "suite seed");
  thm->add_option("--deltas-per-length", thm_opts.deltas_per_length, "random update vectors per layer count");
  thm->add_option("--chains", thm_opts.chain_pairs, "majorization chain pairs");
  thm->add_flag("--mutate", thm_opts.corrupt_entropy, "corrupt the entropy under test (the suite must fail)");

  // scalogram
  auto* scl = app.add_subcommand("scalogram", "dump the W and W^2 grids of one trajectory as CSV");
  std::string scl_pairset, scl_pair, scl_condition = "metaphor", scl_direction, scl_mode = "faithful", scl_out;
  scl->add_option("--pairset", scl_pairset, "pair-set manifest")->required();
  scl->add_option("--pair-id", scl_pair, "pair to transform")->required();
  scl->add_option("--condition", scl_condition, "literal or metaphor");
  scl->add_option("--direction", scl_direction, "direction file (estimated from the pair set when absent)");
  scl->add_option("--mode", scl_mode, "faithful or algebraic");
  scl->add_option("--out", scl_out, "output directory");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic pair set");
  oracles::SyntheticSpec spec;
  std::string gen_effect = "none", gen_zone = "5-13", gen_out, gen_storage = "automatic";
  gen->add_option("--effect", gen_effect, "none, planted_spread_vs_concentrated or shared_direction");
  gen->add_option("--layers", spec.layers, "residual updates L");
  gen->add_option("--hidden", spec.hidden, "hidden size d");
  gen->add_option("--pairs", spec.pairs, "number of pairs K");
  gen->add_option("--zone", gen_zone, "effect zone, e.g. 5-13");
  gen->add_option("--noise", spec.noise_scale, "per-layer noise scale");
  gen->add_option("--strength", spec.effect_strength, "effect strength");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--storage", gen_storage, "embedded, external or automatic");
  gen->add_option("--out", gen_out, "manifest path (default <output dir>/synthetic.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est) {
      const auto ps = trajstore::load_pairset(est_pairset);
      const auto dir = contrast::estimate_direction(ps);
      const fs::path out = est_out.empty() ? default_output_dir() / "direction.json" : fs::path(est_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      contrast::save_direction(dir, out);
      std::cout << "direction over " << dir.source_pair_ids.size() << " pairs written to " << out.string() << "\n";
    } else if (*ana) {
      const auto cfg = run_flags.build(*ana);
      const auto report = pipeline::run_analysis(cfg);
      pipeline::write_report(report, cfg.output_dir);
      std::cout << "active zone: ";
      if (report.cluster.active_zone.empty())
        std::cout << "none";
      else
        std::cout << report.cluster.active_zone.front() << "-" << report.cluster.active_zone.back();
      std::cout << "\nreports written to " << cfg.output_dir.string() << "\n";
    } else if (*val) {
      const auto ps = trajstore::load_pairset(val_pairset);
      const auto dir = direction_for(ps, val_direction);
      std::optional<contrast::ContrastDirection> other;
      if (!val_compare.empty()) other = contrast::load_direction(val_compare);
      stats::TestConfig tc;
      tc.seed = val_seed;
      tc.n_permutations = val_permutations;
      tc.threads = val_threads;
      const auto report = pipeline::run_validation(ps, dir, tc, other);
      std::cout << pipeline::validation_summary(report);
      if (!val_out.empty()) pipeline::write_text_file(val_out, pipeline::validation_to_json(report).dump(2) + "\n");
    } else if (*thm) {
      const auto report = theorems::run_suite(thm_opts);
      std::cout << theorems::format_report(report);
      std::cout << (report.passed() ? "all properties hold\n" : "property violations found\n");
      return report.passed() ? 0 : 1;
    } else if (*scl) {
      const auto ps = trajstore::load_pairset(scl_pairset);
      const auto dir = direction_for(ps, scl_direction);
      const auto& pair = ps.find(scl_pair);
      const auto cond = trajstore::parse_condition(scl_condition);
      const auto& traj = cond == trajstore::Condition::literal ? pair.literal : pair.metaphor;
      wavelet::WaveletConfig wcfg;
      wcfg.mode = parse_mode(scl_mode);
      const auto sc = wavelet::cwt(contrast::project(traj, dir), wcfg);
      const fs::path out = scl_out.empty() ? default_output_dir() : fs::path(scl_out);
      fs::create_directories(out);
      const std::string stem = scl_pair + "_" + scl_condition;
      pipeline::write_text_file(out / (stem + "_W.csv"), pipeline::scalogram_csv(sc, false));
      pipeline::write_text_file(out / (stem + "_W2.csv"), pipeline::scalogram_csv(sc, true));
      std::cout << sc.scales() << "x" << sc.positions() << " grid written to " << (out / (stem + "_W.csv")).string()
                << "\n";
    } else if (*gen) {
      spec.effect = oracles::parse_effect(gen_effect);
      spec.effect_zone = parse_zone(gen_zone);
      trajstore::StorageMode mode = trajstore::StorageMode::automatic;
      if (gen_storage == "embedded")
        mode = trajstore::StorageMode::embedded;
      else if (gen_storage == "external")
        mode = trajstore::StorageMode::external;
      else if (gen_storage != "automatic")
        throw Error(ErrorKind::invalid_argument, "unknown storage mode '" + gen_storage + "'");
      const auto ps = oracles::gen_pairset(spec);
      const fs::path out = gen_out.empty() ? default_output_dir() / "synthetic.json" : fs::path(gen_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      trajstore::save_pairset(ps, out, mode);
      std::cout << ps.size() << " pairs written to " << out.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
