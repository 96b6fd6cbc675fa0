#include "cse/trajstore.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cse/base64.hpp"
#include "cse/error.hpp"

namespace cse::trajstore {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string where_of(std::string_view pair_id, std::string_view field) {
  std::string w = "pair '";
  w += pair_id;
  w += "' ";
  w += field;
  return w;
}

std::vector<std::uint8_t> to_float32_le(const Matrix& m) {
  std::vector<std::uint8_t> bytes(m.rows() * m.cols() * 4);
  std::size_t off = 0;
  for (double v : m.data()) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(bytes.data() + off, &bits, 4);
    off += 4;
  }
  return bytes;
}

Matrix from_float32_le(const std::vector<std::uint8_t>& bytes, std::size_t rows, std::size_t cols,
                       const std::string& where) {
  if (bytes.size() != rows * cols * 4) {
    std::ostringstream msg;
    msg << where << ": declared " << rows << "x" << cols << " float32 (" << rows * cols * 4
        << " bytes) but data holds " << bytes.size() << " bytes";
    throw Error(ErrorKind::shape_mismatch, msg.str());
  }
  Matrix m(rows, cols);
  auto out = m.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return m;
}

std::vector<std::uint8_t> read_file(const fs::path& path, const std::string& where) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, where + ": cannot open blob '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorKind::format, where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, where + "." + key + ": " + e.what());
  }
}

HiddenTrajectory read_trajectory(const json& obj, Condition slot, const ModelGeometry& geometry,
                                 const fs::path& base_dir, const std::string& where) {
  HiddenTrajectory t;
  t.sentence = require<std::string>(obj, "sentence", where);
  t.target_token_index = require<int>(obj, "target_token_index", where);
  t.extraction_convention = require<std::string>(obj, "extraction_convention", where);
  t.token_label = obj.value("token_label", std::string{});
  t.condition = obj.contains("condition") ? parse_condition(require<std::string>(obj, "condition", where))
                                          : slot;

  const auto expect_rows = geometry.positions();
  const auto expect_cols = static_cast<std::size_t>(geometry.hidden);
  std::size_t rows = expect_rows;
  std::size_t cols = expect_cols;
  const bool has_b64 = obj.contains("data_b64");
  const bool has_path = obj.contains("data_path");
  if (has_b64 == has_path)
    throw Error(ErrorKind::format, where + ": exactly one of 'data_b64' or 'data_path' is required");
  if (has_path || obj.contains("rows")) rows = require<std::size_t>(obj, "rows", where);
  if (has_path || obj.contains("cols")) cols = require<std::size_t>(obj, "cols", where);
  if (rows != expect_rows || cols != expect_cols) {
    std::ostringstream msg;
    msg << where << ": declared " << rows << "x" << cols << " but model geometry requires " << expect_rows
        << "x" << expect_cols;
    throw Error(ErrorKind::shape_mismatch, msg.str());
  }

  std::vector<std::uint8_t> bytes;
  if (has_b64) {
    bytes = base64::decode(require<std::string>(obj, "data_b64", where));
  } else {
    const fs::path rel = require<std::string>(obj, "data_path", where);
    bytes = read_file(base_dir / rel, where + ".data_path");
  }
  t.states = from_float32_le(bytes, rows, cols, where);
  return t;
}

json write_trajectory(const HiddenTrajectory& t, bool embed, const fs::path& manifest_dir,
                      const fs::path& blob_rel) {
  json obj;
  obj["token_label"] = t.token_label;
  obj["condition"] = std::string(to_string(t.condition));
  obj["sentence"] = t.sentence;
  obj["target_token_index"] = t.target_token_index;
  obj["extraction_convention"] = t.extraction_convention;
  obj["rows"] = t.states.rows();
  obj["cols"] = t.states.cols();
  const auto bytes = to_float32_le(t.states);
  if (embed) {
    obj["data_b64"] = base64::encode(bytes);
  } else {
    write_file(manifest_dir / blob_rel, bytes);
    obj["data_path"] = blob_rel.generic_string();
  }
  return obj;
}

}  // namespace

void ModelGeometry::validate() const {
  if (layers < 2) throw Error(ErrorKind::invalid_argument, "model geometry needs L >= 2 layers");
  if (hidden < 1) throw Error(ErrorKind::invalid_argument, "model geometry needs hidden dimension d >= 1");
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::literal: return "literal";
    case Condition::metaphor: return "metaphor";
    case Condition::control: return "control";
  }
  return "literal";
}

Condition parse_condition(std::string_view text) {
  if (text == "literal") return Condition::literal;
  if (text == "metaphor") return Condition::metaphor;
  if (text == "control") return Condition::control;
  throw Error(ErrorKind::format, "unknown condition '" + std::string(text) + "'");
}

const MinimalPair& PairSet::find(std::string_view pair_id) const {
  for (const auto& p : pairs)
    if (p.pair_id == pair_id) return p;
  throw Error(ErrorKind::invalid_argument, "unknown pair_id '" + std::string(pair_id) + "'");
}

void validate(const HiddenTrajectory& t, const ModelGeometry& geometry, std::string_view where) {
  const std::string w(where);
  if (t.states.rows() != geometry.positions() || t.states.cols() != static_cast<std::size_t>(geometry.hidden)) {
    std::ostringstream msg;
    msg << w << ": states are " << t.states.rows() << "x" << t.states.cols() << ", expected "
        << geometry.positions() << "x" << geometry.hidden;
    throw Error(ErrorKind::shape_mismatch, msg.str());
  }
  for (std::size_t r = 0; r < t.states.rows(); ++r)
    for (std::size_t c = 0; c < t.states.cols(); ++c)
      if (!std::isfinite(t.states(r, c))) {
        std::ostringstream msg;
        msg << w << ": non-finite state at row " << r << ", column " << c;
        throw Error(ErrorKind::non_finite, msg.str());
      }
}

void validate(const PairSet& ps) {
  ps.geometry.validate();
  if (ps.pairs.empty()) throw Error(ErrorKind::invalid_argument, "pair set holds no pairs");
  std::set<std::string> seen;
  for (const auto& p : ps.pairs) {
    if (!seen.insert(p.pair_id).second)
      throw Error(ErrorKind::duplicate_id, where_of(p.pair_id, "pair_id") + ": duplicate");
    if (p.literal.condition != Condition::literal)
      throw Error(ErrorKind::format, where_of(p.pair_id, "literal.condition") + ": must be 'literal'");
    if (p.metaphor.condition == Condition::literal)
      throw Error(ErrorKind::format,
                  where_of(p.pair_id, "metaphor.condition") + ": must be 'metaphor' or 'control'");
    validate(p.literal, ps.geometry, where_of(p.pair_id, "literal"));
    validate(p.metaphor, ps.geometry, where_of(p.pair_id, "metaphor"));
  }
}

UpdateSeries compute_updates(const HiddenTrajectory& t) {
  const auto& x = t.states;
  if (x.rows() < 2) throw Error(ErrorKind::invalid_argument, "trajectory needs at least two states");
  UpdateSeries u{Matrix(x.rows() - 1, x.cols())};
  for (std::size_t l = 0; l + 1 < x.rows(); ++l)
    for (std::size_t c = 0; c < x.cols(); ++c) u.deltas(l, c) = x(l + 1, c) - x(l, c);
  return u;
}

PairSet load_pairset(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest '" + manifest.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, manifest.string() + ": " + e.what());
  }

  const std::string top = "manifest";
  if (require<int>(doc, "format_version", top) != kFormatVersion)
    throw Error(ErrorKind::format, "unsupported format_version");

  PairSet ps;
  const auto model = require<json>(doc, "model", top);
  ps.geometry.name = require<std::string>(model, "name", "model");
  ps.geometry.layers = require<int>(model, "layers", "model");
  ps.geometry.hidden = require<int>(model, "hidden", "model");
  ps.geometry.validate();
  ps.source_tag = require<std::string>(doc, "source_tag", top);

  const auto base_dir = manifest.parent_path();
  const auto pairs = require<json>(doc, "pairs", top);
  if (!pairs.is_array()) throw Error(ErrorKind::format, "manifest.pairs must be an array");
  for (const auto& obj : pairs) {
    MinimalPair p;
    p.pair_id = require<std::string>(obj, "pair_id", "pairs[]");
    p.lexeme = require<std::string>(obj, "lexeme", where_of(p.pair_id, ""));
    p.literal = read_trajectory(require<json>(obj, "literal", where_of(p.pair_id, "")), Condition::literal,
                                ps.geometry, base_dir, where_of(p.pair_id, "literal"));
    p.metaphor = read_trajectory(require<json>(obj, "metaphor", where_of(p.pair_id, "")),
                                 Condition::metaphor, ps.geometry, base_dir, where_of(p.pair_id, "metaphor"));
    ps.pairs.push_back(std::move(p));
  }
  validate(ps);
  return ps;
}

void save_pairset(const PairSet& ps, const fs::path& manifest, StorageMode mode) {
  validate(ps);
  const auto dir = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  const fs::path blob_dir = manifest.stem().string() + "_blobs";

  const std::size_t traj_bytes = ps.geometry.positions() * static_cast<std::size_t>(ps.geometry.hidden) * 4;
  bool embed = mode == StorageMode::embedded || (mode == StorageMode::automatic && traj_bytes <= kEmbeddedLimitBytes);
  if (embed && traj_bytes > kEmbeddedLimitBytes)
    throw Error(ErrorKind::invalid_argument, "trajectory exceeds the 1 MiB embedded-storage cap");
  if (!embed) {
    std::error_code ec;
    fs::create_directories(dir / blob_dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create blob directory: " + ec.message());
  }

  json doc;
  doc["format_version"] = kFormatVersion;
  doc["model"] = {{"name", ps.geometry.name}, {"layers", ps.geometry.layers}, {"hidden", ps.geometry.hidden}};
  doc["source_tag"] = ps.source_tag;
  json pairs = json::array();
  for (std::size_t k = 0; k < ps.pairs.size(); ++k) {
    const auto& p = ps.pairs[k];
    const std::string stem = "pair" + std::to_string(k);
    json obj;
    obj["pair_id"] = p.pair_id;
    obj["lexeme"] = p.lexeme;
    obj["literal"] = write_trajectory(p.literal, embed, dir, blob_dir / (stem + "_literal.f32"));
    obj["metaphor"] = write_trajectory(p.metaphor, embed, dir, blob_dir / (stem + "_metaphor.f32"));
    pairs.push_back(std::move(obj));
  }
  doc["pairs"] = std::move(pairs);

  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + manifest.string() + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for '" + manifest.string() + "'");
}

PairSet to_storage_precision(PairSet ps) {
  for (auto& p : ps.pairs)
    for (auto* t : {&p.literal, &p.metaphor})
      for (double& v : t->states.data()) v = static_cast<double>(static_cast<float>(v));
  return ps;
}

}  // namespace cse::trajstore
