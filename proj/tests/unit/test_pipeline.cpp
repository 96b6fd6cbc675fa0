#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cse/error.hpp"
#include "cse/oracles.hpp"
#include "cse/pipeline.hpp"
#include "cse/rng.hpp"
#include "support.hpp"

using namespace cse;
using namespace cse::pipeline;
using testsupport::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig quick_config(unsigned threads = 1) {
  RunConfig cfg;
  cfg.test.n_permutations = 1000;
  cfg.cluster_permutations = 500;
  cfg.test.threads = threads;
  cfg.test.seed = 42;
  return cfg;
}

trajstore::PairSet synthetic(oracles::Effect effect, std::uint64_t seed, int pairs = 25) {
  oracles::SyntheticSpec spec;
  spec.effect = effect;
  spec.seed = seed;
  spec.pairs = pairs;
  return oracles::gen_pairset(spec);
}

}  // namespace

TEST_CASE("analysis report has the expected shape") {
  const auto ps = synthetic(oracles::Effect::planted_spread_vs_concentrated, 3);
  const auto r = run_analysis(ps, quick_config());
  CHECK(r.delta_h.per_pair.rows() == 25);
  CHECK(r.delta_h.per_pair.cols() == 25);
  CHECK(r.position_tests.size() == 25);
  CHECK(r.position_seeds.size() == 25);
  CHECK(r.cluster.statistics.size() == 25);
  CHECK(r.aux.size() == 25);
  CHECK(r.separation.per_pair.size() == 25);
  CHECK(r.direction_estimated);
  for (double h : r.H_metaphor.data()) {
    CHECK(h >= 0.0);
    CHECK(h <= std::log(25.0) + 1e-12);
  }
  const auto j = report_to_json(r);
  CHECK(j["provenance"]["seed"] == 42u);
  CHECK(j["provenance"]["config"]["test"]["n_permutations"] == 1000);
  CHECK(j["provenance"]["rng"].get<std::string>().find("mt19937_64") != std::string::npos);
  CHECK(j["position_tests"][0].contains("seed"));
  CHECK(j["cluster"].contains("seed"));
  CHECK(j["separation"].contains("seed"));
}

TEST_CASE("every position test has its own seed") {
  const auto ps = synthetic(oracles::Effect::none, 4, 10);
  const auto r = run_analysis(ps, quick_config());
  for (std::size_t i = 0; i < r.position_seeds.size(); ++i)
    CHECK(r.position_seeds[i] == rng::derive_seed(42, kPositionStreamBase + static_cast<std::uint64_t>(i)));
  CHECK(r.cluster_seed == rng::derive_seed(42, kClusterStream));
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  TempDir dir("pipe_repro");
  const auto ps = synthetic(oracles::Effect::planted_spread_vs_concentrated, 5);
  write_report(run_analysis(ps, quick_config(1)), dir / "a");
  write_report(run_analysis(ps, quick_config(4)), dir / "b");
  for (const char* f : {"report.json", "delta_h.csv", "aux.csv", "position_tests.csv", "entropy_metaphor.csv"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("delta H CSV has one row per pair plus the mean") {
  TempDir dir("pipe_csv");
  const auto ps = synthetic(oracles::Effect::none, 6, 4);
  const auto r = run_analysis(ps, quick_config());
  write_report(r, dir.path());
  std::ifstream in(dir / "delta_h.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("pair_id,b0,b1,", 0) == 0);
  CHECK(header.size() > std::string("b24").size());
  CHECK(header.substr(header.size() - 4) == ",b24");
  int rows = 0;
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 5);
  CHECK(last.rfind("mean,", 0) == 0);
}

TEST_CASE("a supplied direction must match the geometry") {
  const auto ps = synthetic(oracles::Effect::none, 7, 5);
  contrast::ContrastDirection dir;
  dir.geometry = {"other", 24, 8};
  dir.v.assign(8, 0.0);
  dir.v[0] = 1.0;
  try {
    (void)run_analysis(ps, quick_config(), dir);
    FAIL("expected dimension_mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension_mismatch);
    CHECK(std::string(e.what()).find("direction") != std::string::npos);
  }
}

TEST_CASE("degenerate pair sets fail in the direction stage") {
  auto ps = synthetic(oracles::Effect::none, 8, 5);
  for (auto& p : ps.pairs) p.metaphor.states = p.literal.states;
  try {
    (void)run_analysis(ps, quick_config());
    FAIL("expected degenerate_direction");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_direction);
    CHECK(std::string(e.what()).find("stage 'direction'") != std::string::npos);
  }
}

TEST_CASE("config JSON round trip and overrides") {
  TempDir dir("pipe_cfg");
  {
    std::ofstream out(dir / "run.json");
    out << R"({"pairset_path": "set.json", "entropy_kind": "renyi2", "log_base": "base2",
               "wavelet": {"mode": "algebraic", "quadrature_order": 24},
               "test": {"n_permutations": 2000, "seed": 9, "threads": 2},
               "cluster_permutations": 800, "output_dir": "out"})";
  }
  const auto cfg = load_run_config(dir / "run.json");
  CHECK(cfg.pairset_path == dir / "set.json");
  CHECK(cfg.output_dir == dir / "out");
  CHECK(cfg.entropy_kind == spectra::EntropyKind::renyi2);
  CHECK(cfg.log_base == spectra::LogBase::base2);
  CHECK(cfg.wavelet.mode == wavelet::Mode::algebraic);
  CHECK(cfg.wavelet.quadrature_order == 24);
  CHECK(cfg.test.n_permutations == 2000);
  CHECK(cfg.test.seed == 9u);
  CHECK(cfg.cluster_permutations == 800);
  const auto echo = to_json(cfg);
  CHECK_FALSE(echo["test"].contains("threads"));
  CHECK(echo["wavelet"]["mode"] == "algebraic");

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"bogus", 1}}), Error);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"test", {{"alpha", 0.9}}}}), Error);
}

TEST_CASE("validation report on a shared-direction set") {
  const auto ps = synthetic(oracles::Effect::shared_direction, 9);
  const auto dir = contrast::estimate_direction(ps);
  stats::TestConfig tc;
  tc.n_permutations = 1000;
  const auto r = run_validation(ps, dir, tc, dir);
  CHECK(r.separation.n_positive == 25);
  CHECK(r.leave_one_out.size() == 25);
  REQUIRE(r.similarity.has_value());
  CHECK(*r.similarity == doctest::Approx(1.0));
  const auto text = validation_summary(r);
  CHECK(text.find("25/25 pairs positive") != std::string::npos);
  CHECK(text.find("25/25 held-out") != std::string::npos);
  CHECK(text.find("cosine 1.000") != std::string::npos);
  CHECK(validation_to_json(r)["leave_one_out"]["n_correct"] == 25);
}

TEST_CASE("scalogram CSV layout") {
  const auto s = contrast::signal_from_updates(0.0, std::vector<double>(12, 0.0));
  const auto sc = wavelet::cwt(s, wavelet::WaveletConfig{});
  const auto csv = scalogram_csv(sc, true);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("scale,b0,b1,", 0) == 0);
  CHECK(line.substr(line.size() - 4) == ",b12");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind(std::to_string(rows) + ",0,0,", 0) == 0);
  }
  CHECK(rows == 13);
}

TEST_CASE("number formatting round trips") {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 123456789.125})
    CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}
