#include "cse/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cse/error.hpp"
#include "cse/rng.hpp"

namespace cse::pipeline {
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view to_string(wavelet::Mode m) { return m == wavelet::Mode::faithful ? "faithful" : "algebraic"; }

wavelet::Mode parse_mode(std::string_view text) {
  if (text == "faithful") return wavelet::Mode::faithful;
  if (text == "algebraic") return wavelet::Mode::algebraic;
  throw Error(ErrorKind::invalid_argument, "unknown wavelet mode '" + std::string(text) + "'");
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorKind::format, std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorKind::format, std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, std::string(where) + "." + key + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

// Runs `f`, re-raising module errors with the stage name in front.
template <class F>
auto stage(std::string_view name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "stage '" + std::string(name) + "': " + e.detail());
  }
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json numbers(std::span<const double> xs) {
  json a = json::array();
  for (double x : xs) a.push_back(number_or_null(x));
  return a;
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& row_ids, std::string_view first_col) {
  std::string out(first_col);
  for (std::size_t b = 0; b < m.cols(); ++b) out += ",b" + std::to_string(b);
  out += '\n';
  for (std::size_t k = 0; k < m.rows(); ++k) {
    out += row_ids[k];
    for (double x : m.row(k)) out += "," + format_number(x);
    out += '\n';
  }
  return out;
}

json direction_json(const contrast::ContrastDirection& d) {
  return {{"geometry", {{"name", d.geometry.name}, {"layers", d.geometry.layers}, {"hidden", d.geometry.hidden}}},
          {"source_pair_ids", d.source_pair_ids},
          {"v", numbers(d.v)}};
}

json separation_json(const contrast::SeparationReport& s) {
  json per = json::array();
  for (const auto& e : s.per_pair) per.push_back({{"pair_id", e.pair_id}, {"mean_diff", number_or_null(e.mean_diff)}});
  return {{"per_pair", per},
          {"n_positive", s.n_positive},
          {"n_pairs", s.per_pair.size()},
          {"sign_test_p", s.sign_test_p}};
}

Matrix condition_entropies(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                           std::span<const wavelet::ResponseOperator> ops, const RunConfig& cfg,
                           bool metaphor) {
  Matrix H(ps.size(), ps.geometry.positions(), kNaN);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const auto& p = ps.pairs[k];
    try {
      const auto prof = spectra::entropy_profile(contrast::project(metaphor ? p.metaphor : p.literal, dir), ops,
                                                 cfg.entropy_kind, cfg.log_base);
      for (std::size_t b = 0; b < prof.H.size(); ++b) H(k, b) = prof.H[b];
    } catch (const Error& e) {
      throw Error(e.kind(), "pair '" + p.pair_id + "' (" + (metaphor ? "metaphor" : "literal") + "): " + e.detail());
    }
  }
  return H;
}

}  // namespace

void RunConfig::validate() const {
  wavelet.validate();
  test.validate();
  if (cluster_permutations < 100) throw Error(ErrorKind::invalid_argument, "cluster_permutations must be >= 100");
  if (test.threads == 0) throw Error(ErrorKind::invalid_argument, "threads must be >= 1");
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j,
                      {"pairset_path", "direction_path", "wavelet", "entropy_kind", "log_base", "test",
                       "cluster_permutations", "output_dir"},
                      "config");
  RunConfig cfg;
  std::string text;
  if (j.contains("pairset_path")) {
    read_if(j, "pairset_path", text, "config");
    cfg.pairset_path = resolve(base_dir, text);
  }
  if (j.contains("direction_path") && !j.at("direction_path").is_null()) {
    read_if(j, "direction_path", text, "config");
    cfg.direction_path = resolve(base_dir, text);
  }
  if (j.contains("output_dir")) {
    read_if(j, "output_dir", text, "config");
    cfg.output_dir = resolve(base_dir, text);
  }
  if (j.contains("entropy_kind")) {
    read_if(j, "entropy_kind", text, "config");
    cfg.entropy_kind = spectra::parse_entropy_kind(text);
  }
  if (j.contains("log_base")) {
    read_if(j, "log_base", text, "config");
    cfg.log_base = spectra::parse_log_base(text);
  }
  read_if(j, "cluster_permutations", cfg.cluster_permutations, "config");
  if (j.contains("wavelet")) {
    const auto& w = j.at("wavelet");
    reject_unknown_keys(w, {"omega0", "quadrature_order", "tail_halfwidth", "mode"}, "config.wavelet");
    read_if(w, "omega0", cfg.wavelet.omega0, "config.wavelet");
    read_if(w, "quadrature_order", cfg.wavelet.quadrature_order, "config.wavelet");
    read_if(w, "tail_halfwidth", cfg.wavelet.tail_halfwidth, "config.wavelet");
    if (w.contains("mode")) {
      read_if(w, "mode", text, "config.wavelet");
      cfg.wavelet.mode = parse_mode(text);
    }
  }
  if (j.contains("test")) {
    const auto& t = j.at("test");
    reject_unknown_keys(t, {"n_permutations", "alpha", "seed", "threads"}, "config.test");
    read_if(t, "n_permutations", cfg.test.n_permutations, "config.test");
    read_if(t, "alpha", cfg.test.alpha, "config.test");
    read_if(t, "seed", cfg.test.seed, "config.test");
    read_if(t, "threads", cfg.test.threads, "config.test");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& cfg) {
  json j;
  j["pairset_path"] = cfg.pairset_path.string();
  j["direction_path"] = cfg.direction_path ? json(cfg.direction_path->string()) : json(nullptr);
  j["wavelet"] = {{"omega0", cfg.wavelet.omega0},
                  {"quadrature_order", cfg.wavelet.quadrature_order},
                  {"tail_halfwidth", cfg.wavelet.tail_halfwidth},
                  {"mode", to_string(cfg.wavelet.mode)}};
  j["entropy_kind"] = spectra::to_string(cfg.entropy_kind);
  j["log_base"] = spectra::to_string(cfg.log_base);
  j["test"] = {{"n_permutations", cfg.test.n_permutations},
               {"alpha", cfg.test.alpha},
               {"seed", cfg.test.seed},
               {"sided", "one_sided_positive"}};
  j["cluster_permutations"] = cfg.cluster_permutations;
  return j;
}

AnalysisReport run_analysis(const trajstore::PairSet& ps, const RunConfig& cfg,
                            const std::optional<contrast::ContrastDirection>& direction) {
  stage("config", [&] { cfg.validate(); });
  stage("load", [&] { trajstore::validate(ps); });
  AnalysisReport r;
  if (direction) {
    if (!(direction->geometry == ps.geometry))
      throw Error(ErrorKind::dimension_mismatch,
                  "stage 'direction': direction geometry (" + direction->geometry.name + ", L=" +
                      std::to_string(direction->geometry.layers) + ", d=" +
                      std::to_string(direction->geometry.hidden) + ") does not match the pair set (" +
                      ps.geometry.name + ", L=" + std::to_string(ps.geometry.layers) + ", d=" +
                      std::to_string(ps.geometry.hidden) + ")");
    r.direction = *direction;
    r.direction_estimated = false;
  } else {
    r.direction = stage("direction", [&] { return contrast::estimate_direction(ps); });
  }

  const auto ops = stage("operators", [&] {
    return wavelet::build_response_operators(ps.geometry, cfg.wavelet, cfg.test.threads);
  });
  r.H_metaphor = stage("entropy", [&] { return condition_entropies(ps, r.direction, ops, cfg, true); });
  r.H_literal = stage("entropy", [&] { return condition_entropies(ps, r.direction, ops, cfg, false); });
  r.delta_h = stage("delta_h", [&] {
    return spectra::delta_h(ps, r.direction, ops, cfg.entropy_kind, cfg.log_base);
  });

  const Matrix& D = r.delta_h.per_pair;
  stage("position_tests", [&] {
    for (std::size_t b = 0; b < D.cols(); ++b) {
      std::vector<double> valid;
      for (std::size_t k = 0; k < D.rows(); ++k)
        if (!std::isnan(D(k, b))) valid.push_back(D(k, b));
      if (valid.size() < 2) continue;
      stats::TestConfig tc = cfg.test;
      tc.seed = rng::derive_seed(cfg.test.seed, kPositionStreamBase + b);
      r.position_tests.push_back(stats::sign_flip_test(valid, tc, static_cast<int>(b)));
      r.position_seeds.push_back(tc.seed);
    }
  });

  r.cluster_seed = rng::derive_seed(cfg.test.seed, kClusterStream);
  r.cluster = stage("cluster", [&] {
    stats::TestConfig tc = cfg.test;
    tc.seed = r.cluster_seed;
    tc.n_permutations = cfg.cluster_permutations;
    return stats::cluster_permutation(D, tc);
  });
  if (!r.cluster.active_zone.empty())
    r.effects = stage("effect_sizes", [&] { return stats::effect_sizes(D, r.cluster.active_zone); });

  r.separation_seed = rng::derive_seed(cfg.test.seed, kSeparationStream);
  r.separation = stage("separation", [&] {
    stats::TestConfig tc = cfg.test;
    tc.seed = r.separation_seed;
    return contrast::projection_separation(ps, r.direction, tc);
  });
  r.aux = stage("aux", [&] { return spectra::aux_metrics(ps, r.direction, ops); });

  r.provenance = {
      {"report_format_version", kReportFormatVersion},
      {"pairset_format_version", trajstore::kFormatVersion},
      {"config", to_json(cfg)},
      {"seed", cfg.test.seed},
      {"rng", rng::kIdentity},
      {"seed_derivation", "derive_seed(seed, stream): separation=1, cluster=2, position b=1000+b"},
      {"source_tag", ps.source_tag},
      {"geometry", {{"name", ps.geometry.name}, {"layers", ps.geometry.layers}, {"hidden", ps.geometry.hidden}}},
      {"n_pairs", ps.size()},
      {"direction", r.direction_estimated ? "estimated from pair set" : "loaded from file"},
      {"aux_definitions",
       "cwt_energy = sum W^2; H_W = Shannon entropy of position-summed scale energies; "
       "H_q = Shannon entropy of normalized full-dimensional update energies"},
  };
  return r;
}

AnalysisReport run_analysis(const RunConfig& cfg) {
  const auto ps = stage("load", [&] { return trajstore::load_pairset(cfg.pairset_path); });
  std::optional<contrast::ContrastDirection> dir;
  if (cfg.direction_path) dir = stage("direction", [&] { return contrast::load_direction(*cfg.direction_path); });
  return run_analysis(ps, cfg, dir);
}

json report_to_json(const AnalysisReport& r) {
  json j;
  j["provenance"] = r.provenance;
  j["direction"] = direction_json(r.direction);

  json dh;
  dh["pair_ids"] = r.delta_h.pair_ids;
  json rows = json::array();
  for (std::size_t k = 0; k < r.delta_h.per_pair.rows(); ++k) rows.push_back(numbers(r.delta_h.per_pair.row(k)));
  dh["per_pair"] = rows;
  dh["mean_profile"] = numbers(r.delta_h.mean_profile);
  dh["n_defined"] = r.delta_h.n_defined;
  j["delta_h"] = dh;

  double h_min = std::numeric_limits<double>::infinity();
  double h_max = -h_min;
  for (const Matrix* m : {&r.H_metaphor, &r.H_literal})
    for (double h : m->data())
      if (std::isfinite(h)) {
        h_min = std::min(h_min, h);
        h_max = std::max(h_max, h);
      }
  j["entropy_range"] = {{"min", number_or_null(h_min)}, {"max", number_or_null(h_max)}};

  json pt = json::array();
  for (std::size_t i = 0; i < r.position_tests.size(); ++i) {
    const auto& t = r.position_tests[i];
    pt.push_back({{"b", t.b},
                  {"statistic", number_or_null(t.statistic)},
                  {"p", t.p},
                  {"n_positive_pairs", t.n_positive_pairs},
                  {"n_valid", t.n_valid},
                  {"seed", r.position_seeds[i]}});
  }
  j["position_tests"] = pt;

  json clusters = json::array();
  for (const auto& c : r.cluster.clusters)
    clusters.push_back({{"start_b", c.start_b}, {"end_b", c.end_b}, {"mass", c.mass}, {"p_cluster", c.p_cluster}});
  j["cluster"] = {{"clusters", clusters},
                  {"active_zone", r.cluster.active_zone},
                  {"threshold_stat", r.cluster.threshold_stat},
                  {"statistics", numbers(r.cluster.statistics)},
                  {"excluded_positions", r.cluster.excluded_positions},
                  {"n_pairs", r.cluster.n_pairs},
                  {"n_permutations", r.cluster.n_permutations},
                  {"seed", r.cluster_seed}};

  if (r.effects)
    j["effect_sizes"] = {{"per_position_d", numbers(r.effects->per_position_d)},
                         {"undefined_positions", r.effects->undefined_positions},
                         {"zone_mean_d", number_or_null(r.effects->zone_mean_d)},
                         {"zone_mean_delta", number_or_null(r.effects->zone_mean_delta)}};
  else
    j["effect_sizes"] = nullptr;

  j["separation"] = separation_json(r.separation);
  j["separation"]["seed"] = r.separation_seed;

  json aux = json::array();
  for (const auto& a : r.aux)
    aux.push_back({{"pair_id", a.pair_id},
                   {"cwt_energy_met", number_or_null(a.cwt_energy_met)},
                   {"cwt_energy_lit", number_or_null(a.cwt_energy_lit)},
                   {"H_W_met", number_or_null(a.H_W_met)},
                   {"H_W_lit", number_or_null(a.H_W_lit)},
                   {"Hq_met", number_or_null(a.Hq_met)},
                   {"Hq_lit", number_or_null(a.Hq_lit)}});
  j["aux"] = aux;
  return j;
}

void write_report(const AnalysisReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());

  write_text_file(dir / "report.json", report_to_json(r).dump(2) + "\n");

  auto ids = r.delta_h.pair_ids;
  Matrix dh(r.delta_h.per_pair.rows() + 1, r.delta_h.per_pair.cols());
  for (std::size_t k = 0; k < r.delta_h.per_pair.rows(); ++k)
    for (std::size_t b = 0; b < dh.cols(); ++b) dh(k, b) = r.delta_h.per_pair(k, b);
  for (std::size_t b = 0; b < dh.cols(); ++b) dh(dh.rows() - 1, b) = r.delta_h.mean_profile[b];
  ids.push_back("mean");
  write_text_file(dir / "delta_h.csv", matrix_csv(dh, ids, "pair_id"));
  write_text_file(dir / "entropy_metaphor.csv", matrix_csv(r.H_metaphor, r.delta_h.pair_ids, "pair_id"));
  write_text_file(dir / "entropy_literal.csv", matrix_csv(r.H_literal, r.delta_h.pair_ids, "pair_id"));

  std::string pt = "b,mean_delta_h,p,n_positive_pairs,n_valid,t,seed\n";
  for (std::size_t i = 0; i < r.position_tests.size(); ++i) {
    const auto& t = r.position_tests[i];
    pt += std::to_string(t.b) + "," + format_number(t.statistic) + "," + format_number(t.p) + "," +
          std::to_string(t.n_positive_pairs) + "," + std::to_string(t.n_valid) + "," +
          format_number(r.cluster.statistics[static_cast<std::size_t>(t.b)]) + "," +
          std::to_string(r.position_seeds[i]) + "\n";
  }
  write_text_file(dir / "position_tests.csv", pt);

  std::string aux = "pair_id,cwt_energy_met,cwt_energy_lit,H_W_met,H_W_lit,Hq_met,Hq_lit\n";
  for (const auto& a : r.aux)
    aux += a.pair_id + "," + format_number(a.cwt_energy_met) + "," + format_number(a.cwt_energy_lit) + "," +
           format_number(a.H_W_met) + "," + format_number(a.H_W_lit) + "," + format_number(a.Hq_met) + "," +
           format_number(a.Hq_lit) + "\n";
  write_text_file(dir / "aux.csv", aux);
}

ValidationReport run_validation(const trajstore::PairSet& ps, const contrast::ContrastDirection& dir,
                                const stats::TestConfig& test,
                                const std::optional<contrast::ContrastDirection>& other) {
  stage("load", [&] { trajstore::validate(ps); });
  if (!(dir.geometry == ps.geometry))
    throw Error(ErrorKind::dimension_mismatch, "stage 'direction': direction geometry does not match the pair set");
  ValidationReport r;
  r.seed = rng::derive_seed(test.seed, kSeparationStream);
  r.separation = stage("separation", [&] {
    stats::TestConfig tc = test;
    tc.seed = r.seed;
    return contrast::projection_separation(ps, dir, tc);
  });
  r.leave_one_out = stage("leave_one_out", [&] { return contrast::leave_one_out(ps, test.threads); });
  if (other) r.similarity = stage("similarity", [&] { return contrast::direction_similarity(dir, *other); });
  return r;
}

json validation_to_json(const ValidationReport& r) {
  json j;
  j["separation"] = separation_json(r.separation);
  j["separation"]["seed"] = r.seed;
  json loo = json::array();
  int correct = 0;
  for (const auto& h : r.leave_one_out) {
    loo.push_back({{"held_out_pair_id", h.held_out_pair_id},
                   {"mean_diff_sign", h.mean_diff_sign},
                   {"mean_diff", number_or_null(h.mean_diff)}});
    if (h.mean_diff_sign > 0) ++correct;
  }
  j["leave_one_out"] = {{"folds", loo}, {"n_correct", correct}, {"n_folds", r.leave_one_out.size()}};
  j["similarity"] = r.similarity ? json(*r.similarity) : json(nullptr);
  j["rng"] = rng::kIdentity;
  return j;
}

std::string validation_summary(const ValidationReport& r) {
  std::ostringstream out;
  out << "projection separation: " << r.separation.n_positive << "/" << r.separation.per_pair.size()
      << " pairs positive (sign-flip p = " << format_number(r.separation.sign_test_p) << ")\n";
  int correct = 0;
  for (const auto& h : r.leave_one_out)
    if (h.mean_diff_sign > 0) ++correct;
  out << "leave-one-out: " << correct << "/" << r.leave_one_out.size() << " held-out pairs separated\n";
  if (r.similarity) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *r.similarity);
    out << "direction similarity: cosine " << buf << "\n";
  }
  return out.str();
}

std::string scalogram_csv(const wavelet::Scalogram& sc, bool squared) {
  std::string out = "scale";
  for (std::size_t b = 0; b < sc.positions(); ++b) out += ",b" + std::to_string(b);
  out += '\n';
  for (std::size_t j = 0; j < sc.scales(); ++j) {
    out += std::to_string(j + 1);
    for (std::size_t b = 0; b < sc.positions(); ++b) out += "," + format_number(squared ? sc.energy(j, b) : sc.W(j, b));
    out += '\n';
  }
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

}  // namespace cse::pipeline
