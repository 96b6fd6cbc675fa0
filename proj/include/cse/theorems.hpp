#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Randomized property battery for the scale-entropy structure results and
// the majorization ordering, plus the fixed incomparability fixture.
namespace cse::theorems {

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  int deltas_per_length = 400;  // random update vectors per layer count
  std::vector<int> layer_counts = {4, 12, 24};
  int chain_pairs = 1000;
  // Adds 1e-6 to every entropy the suite evaluates; the suite must then fail.
  bool corrupt_entropy = false;
};

struct PropertyResult {
  std::string name;
  long checks = 0;
  long failures = 0;
  std::string first_failure;

  bool passed() const noexcept { return checks > 0 && failures == 0; }
};

struct SuiteReport {
  std::vector<PropertyResult> properties;
  double remark_H_p_bits = 0.0;  // (0.5, 0.25, 0.25)
  double remark_H_q_bits = 0.0;  // (0.4, 0.4, 0.2)
  std::string remark_relation;
  long random_deltas = 0;
  double seconds = 0.0;

  bool passed() const noexcept;
  const PropertyResult* find(std::string_view name) const;
};

SuiteReport run_suite(const SuiteOptions& opts);

// One line per property, then the fixture line.
std::string format_report(const SuiteReport& report);

}  // namespace cse::theorems
