#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cse/contrast.hpp"
#include "cse/spectra.hpp"
#include "cse/stats.hpp"
#include "cse/trajstore.hpp"
#include "cse/wavelet.hpp"

// End-to-end analysis runs and their report files.
namespace cse::pipeline {

inline constexpr int kReportFormatVersion = 1;

struct RunConfig {
  std::filesystem::path pairset_path;
  std::optional<std::filesystem::path> direction_path;  // estimated from the pair set when absent
  wavelet::WaveletConfig wavelet;
  spectra::EntropyKind entropy_kind = spectra::EntropyKind::shannon;
  spectra::LogBase log_base = spectra::LogBase::natural;
  stats::TestConfig test;  // n_permutations applies to the per-position tests
  int cluster_permutations = stats::kDefaultClusterPermutations;
  std::filesystem::path output_dir = ".";

  void validate() const;
};

// Keys mirror the field names; wavelet and test settings are nested objects.
// Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
// Everything except thread count and output directory, which never change results.
nlohmann::json to_json(const RunConfig& cfg);

// Substream indices under the top-level seed.
inline constexpr std::uint64_t kSeparationStream = 1;
inline constexpr std::uint64_t kClusterStream = 2;
inline constexpr std::uint64_t kPositionStreamBase = 1000;

struct AnalysisReport {
  contrast::ContrastDirection direction;
  bool direction_estimated = true;
  spectra::DeltaHProfile delta_h;
  Matrix H_metaphor;  // K x (L+1)
  Matrix H_literal;
  std::vector<stats::PositionTestResult> position_tests;  // positions with at least 2 defined pairs
  std::vector<std::uint64_t> position_seeds;              // aligned with position_tests
  stats::ClusterResult cluster;
  std::uint64_t cluster_seed = 0;
  std::optional<stats::EffectSizes> effects;  // only when an active zone exists
  contrast::SeparationReport separation;
  std::uint64_t separation_seed = 0;
  std::vector<spectra::AuxRecord> aux;
  nlohmann::json provenance;
};

// Every stage is wrapped so that failures name the stage.
AnalysisReport run_analysis(const trajstore::PairSet& ps, const RunConfig& cfg,
                            const std::optional<contrast::ContrastDirection>& direction = std::nullopt);

// Loads the pair set (and direction, if configured) named in `cfg`.
AnalysisReport run_analysis(const RunConfig& cfg);

nlohmann::json report_to_json(const AnalysisReport& report);

// report.json, delta_h.csv, entropy_metaphor.csv, entropy_literal.csv,
// position_tests.csv and aux.csv under `dir`.
void write_report(const AnalysisReport& report, const std::filesystem::path& dir);

struct ValidationReport {
  contrast::SeparationReport separation;
  std::vector<contrast::HoldOut> leave_one_out;
  std::optional<double> similarity;
  std::uint64_t seed = 0;
};

ValidationReport run_validation(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                                const stats::TestConfig& test,
                                const std::optional<contrast::ContrastDirection>& other = std::nullopt);

nlohmann::json validation_to_json(const ValidationReport& report);
// Lines such as "projection separation: 21/25 pairs positive (p = ...)".
std::string validation_summary(const ValidationReport& report);

// `scale,b0,b1,...` header, one row per scale. `squared` writes W^2.
std::string scalogram_csv(const wavelet::Scalogram& sc, bool squared);

// Shortest round-trip decimal form; NaN is written as "nan".
std::string format_number(double x);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cse::pipeline
