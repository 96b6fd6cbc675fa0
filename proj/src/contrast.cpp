#include "cse/contrast.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "cse/base64.hpp"
#include "cse/error.hpp"

namespace cse::contrast {
using trajstore::HiddenTrajectory;
using trajstore::MinimalPair;
using trajstore::PairSet;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Accumulates sum_l (delta_met - delta_lit) for one pair into `acc`.
void add_pair_difference(const MinimalPair& p, std::vector<double>& acc) {
  const auto& met = p.metaphor.states;
  const auto& lit = p.literal.states;
  for (std::size_t l = 0; l + 1 < met.rows(); ++l)
    for (std::size_t c = 0; c < acc.size(); ++c)
      acc[c] += (met(l + 1, c) - met(l, c)) - (lit(l + 1, c) - lit(l, c));
}

ContrastDirection direction_from(const PairSet& ps, std::span<const std::size_t> members) {
  std::vector<double> acc(static_cast<std::size_t>(ps.geometry.hidden), 0.0);
  ContrastDirection dir;
  dir.geometry = ps.geometry;
  for (std::size_t k : members) {
    add_pair_difference(ps.pairs[k], acc);
    dir.source_pair_ids.push_back(ps.pairs[k].pair_id);
  }
  const double norm = std::sqrt(dot(acc, acc));
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw Error(ErrorKind::degenerate_direction,
                "aggregate metaphor-minus-literal update difference is zero; no contrast direction exists");
  for (double& x : acc) x /= norm;
  dir.v = std::move(acc);
  return dir;
}

}  // namespace

ContrastDirection estimate_direction(const PairSet& ps) {
  if (ps.pairs.empty()) throw Error(ErrorKind::insufficient_data, "direction estimation needs K >= 1 pairs");
  std::vector<std::size_t> all(ps.pairs.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return direction_from(ps, all);
}

ProjectedSignal project(const HiddenTrajectory& t, const ContrastDirection& dir) {
  if (t.hidden() != dir.v.size())
    throw Error(ErrorKind::dimension_mismatch, "trajectory hidden size " + std::to_string(t.hidden()) +
                                                   " does not match direction length " +
                                                   std::to_string(dir.v.size()));
  ProjectedSignal out;
  const auto& x = t.states;
  out.s.resize(x.rows());
  for (std::size_t l = 0; l < x.rows(); ++l) out.s[l] = dot(dir.v, x.row(l));
  out.delta.resize(x.rows() - 1);
  std::vector<double> step(x.cols());
  for (std::size_t l = 0; l + 1 < x.rows(); ++l) {
    for (std::size_t c = 0; c < x.cols(); ++c) step[c] = x(l + 1, c) - x(l, c);
    out.delta[l] = dot(dir.v, step);
  }
  return out;
}

ProjectedSignal signal_from_updates(double s0, std::vector<double> delta) {
  ProjectedSignal out;
  out.s.resize(delta.size() + 1);
  out.s[0] = s0;
  for (std::size_t l = 0; l < delta.size(); ++l) out.s[l + 1] = out.s[l] + delta[l];
  out.delta = std::move(delta);
  return out;
}

double mean_projected_difference(const MinimalPair& pair, const ContrastDirection& dir) {
  const auto met = project(pair.metaphor, dir);
  const auto lit = project(pair.literal, dir);
  double sum = 0.0;
  for (std::size_t l = 0; l < met.delta.size(); ++l) sum += met.delta[l] - lit.delta[l];
  return sum / static_cast<double>(met.delta.size());
}

SeparationReport projection_separation(const PairSet& ps, const ContrastDirection& dir,
                                       const stats::TestConfig& cfg) {
  SeparationReport r;
  std::vector<double> means;
  for (const auto& p : ps.pairs) {
    const double m = mean_projected_difference(p, dir);
    r.per_pair.push_back({p.pair_id, m});
    means.push_back(m);
    if (m > 0.0) ++r.n_positive;
  }
  r.sign_test_p = stats::sign_flip_test(means, cfg).p;
  return r;
}

std::vector<HoldOut> leave_one_out(const PairSet& ps, unsigned threads) {
  const std::size_t k = ps.pairs.size();
  if (k < 2) throw Error(ErrorKind::insufficient_data, "leave-one-out needs K >= 2 pairs");
  std::vector<HoldOut> out(k);
  auto fold = [&](std::size_t held) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < k; ++i)
      if (i != held) members.push_back(i);
    ContrastDirection dir;
    try {
      dir = direction_from(ps, members);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold holding out '" + ps.pairs[held].pair_id + "': " + e.detail());
    }
    const double m = mean_projected_difference(ps.pairs[held], dir);
    out[held] = {ps.pairs[held].pair_id, m > 0.0 ? 1 : -1, m};
  };
  const unsigned n_workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(k)));
  if (n_workers == 1) {
    for (std::size_t i = 0; i < k; ++i) fold(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n_workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < k; i += n_workers) fold(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double direction_similarity(const ContrastDirection& a, const ContrastDirection& b) {
  if (a.v.size() != b.v.size())
    throw Error(ErrorKind::dimension_mismatch, "directions have different lengths");
  const double c = dot(a.v, b.v) / std::sqrt(dot(a.v, a.v) * dot(b.v, b.v));
  return std::clamp(c, -1.0, 1.0);
}

void save_direction(const ContrastDirection& dir, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(dir.v.size() * 8);
  for (std::size_t i = 0; i < dir.v.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(dir.v[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(bytes.data() + 8 * i, &bits, 8);
  }
  nlohmann::json doc;
  doc["geometry"] = {{"name", dir.geometry.name}, {"layers", dir.geometry.layers}, {"hidden", dir.geometry.hidden}};
  doc["source_pair_ids"] = dir.source_pair_ids;
  doc["v_b64"] = base64::encode(bytes);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

ContrastDirection load_direction(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open direction file '" + path.string() + "'");
  ContrastDirection dir;
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto& g = doc.at("geometry");
    dir.geometry = {g.at("name").get<std::string>(), g.at("layers").get<int>(), g.at("hidden").get<int>()};
    dir.source_pair_ids = doc.at("source_pair_ids").get<std::vector<std::string>>();
    const auto bytes = base64::decode(doc.at("v_b64").get<std::string>());
    if (bytes.size() != static_cast<std::size_t>(dir.geometry.hidden) * 8)
      throw Error(ErrorKind::shape_mismatch, "direction vector length does not match geometry.hidden");
    dir.v.resize(bytes.size() / 8);
    for (std::size_t i = 0; i < dir.v.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + 8 * i, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      dir.v[i] = std::bit_cast<double>(bits);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
  double norm = 0.0;
  for (double x : dir.v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::non_finite, "direction has non-finite entries");
    norm += x * x;
  }
  if (std::abs(std::sqrt(norm) - 1.0) > 1e-12)
    throw Error(ErrorKind::format, "direction vector is not unit norm");
  return dir;
}

}  // namespace cse::contrast
