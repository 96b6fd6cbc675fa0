#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cse/matrix.hpp"

// Hidden-state trajectories, minimal pairs and their on-disk interchange format.
namespace cse::trajstore {

struct ModelGeometry {
  std::string name;
  int layers = 0;  // number of residual updates L
  int hidden = 0;  // embedding dimension d

  // Throws cse::Error(invalid_argument) unless L >= 2 and d >= 1.
  void validate() const;
  std::size_t positions() const noexcept { return static_cast<std::size_t>(layers) + 1; }

  friend bool operator==(const ModelGeometry&, const ModelGeometry&) = default;
};

enum class Condition { literal, metaphor, control };

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view text);

struct HiddenTrajectory {
  std::string token_label;
  Condition condition = Condition::literal;
  Matrix states;  // (L+1) x d, row l = x_l
  std::string sentence;
  int target_token_index = 0;
  std::string extraction_convention;

  std::size_t layers() const noexcept { return states.rows() == 0 ? 0 : states.rows() - 1; }
  std::size_t hidden() const noexcept { return states.cols(); }

  friend bool operator==(const HiddenTrajectory&, const HiddenTrajectory&) = default;
};

// Row l holds x_{l+1} - x_l.
struct UpdateSeries {
  Matrix deltas;
};

struct MinimalPair {
  std::string pair_id;
  std::string lexeme;
  HiddenTrajectory literal;
  HiddenTrajectory metaphor;  // condition `metaphor`, or `control` for literal-literal control sets

  friend bool operator==(const MinimalPair&, const MinimalPair&) = default;
};

struct PairSet {
  ModelGeometry geometry;
  std::vector<MinimalPair> pairs;
  std::string source_tag;

  std::size_t size() const noexcept { return pairs.size(); }
  const MinimalPair& find(std::string_view pair_id) const;

  friend bool operator==(const PairSet&, const PairSet&) = default;
};

// Checks every PairSet invariant; errors name the offending pair and field.
void validate(const PairSet& ps);
void validate(const HiddenTrajectory& t, const ModelGeometry& geometry, std::string_view where);

UpdateSeries compute_updates(const HiddenTrajectory& t);

enum class StorageMode {
  embedded,   // base64 float32 inside the manifest
  external,   // raw float32 blobs next to the manifest
  automatic,  // embedded up to the size cap, external beyond it
};

inline constexpr int kFormatVersion = 1;
inline constexpr std::size_t kEmbeddedLimitBytes = std::size_t{1} << 20;

PairSet load_pairset(const std::filesystem::path& manifest);

// External blobs are written to `<stem>_blobs/` beside the manifest.
void save_pairset(const PairSet& ps, const std::filesystem::path& manifest,
                  StorageMode mode = StorageMode::automatic);

// Rounds every state entry to float32, i.e. the precision that survives a save.
PairSet to_storage_precision(PairSet ps);

}  // namespace cse::trajstore
