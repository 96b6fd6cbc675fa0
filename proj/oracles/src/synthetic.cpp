#include <algorithm>
#include <cmath>
#include <random>

#include "cse/error.hpp"
#include "cse/oracles.hpp"

namespace cse::oracles {
using trajstore::Condition;
using trajstore::HiddenTrajectory;

std::string_view to_string(Effect e) {
  switch (e) {
    case Effect::none: return "none";
    case Effect::planted_spread_vs_concentrated: return "planted_spread_vs_concentrated";
    case Effect::shared_direction: return "shared_direction";
  }
  return "none";
}

Effect parse_effect(std::string_view text) {
  if (text == "none") return Effect::none;
  if (text == "planted_spread_vs_concentrated" || text == "planted_spread") return Effect::planted_spread_vs_concentrated;
  if (text == "shared_direction") return Effect::shared_direction;
  throw Error(ErrorKind::invalid_argument, "unknown synthetic effect '" + std::string(text) + "'");
}

void SyntheticSpec::validate() const {
  if (layers < 2 || hidden < 1 || pairs < 1)
    throw Error(ErrorKind::invalid_argument, "synthetic spec needs L >= 2, d >= 1, K >= 1");
  for (int b : effect_zone)
    if (b < 0 || b > layers) throw Error(ErrorKind::invalid_argument, "effect zone outside 0..L");
  if (effect == Effect::planted_spread_vs_concentrated && effect_zone.empty())
    throw Error(ErrorKind::invalid_argument, "planted effect needs a non-empty zone");
  if (!(noise_scale >= 0.0)) throw Error(ErrorKind::invalid_argument, "noise_scale must be >= 0");
}

trajstore::PairSet gen_pairset(const SyntheticSpec& spec) {
  spec.validate();
  const auto L = static_cast<std::size_t>(spec.layers);
  const auto d = static_cast<std::size_t>(spec.hidden);
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Hidden unit direction carrying the planted contrast.
  std::vector<double> u(d);
  double norm = 0.0;
  for (double& x : u) {
    x = normal(gen);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : u) x /= norm;

  std::vector<int> zone_layers;
  for (int b : spec.effect_zone)
    if (b < spec.layers) zone_layers.push_back(b);
  std::sort(zone_layers.begin(), zone_layers.end());
  zone_layers.erase(std::unique(zone_layers.begin(), zone_layers.end()), zone_layers.end());

  trajstore::PairSet ps;
  ps.geometry = {"synthetic", spec.layers, spec.hidden};
  ps.source_tag = "synthetic:" + std::string(to_string(spec.effect));

  auto make = [&](Condition c, const std::vector<double>& x0, const std::vector<double>& along_u) {
    HiddenTrajectory t;
    t.condition = c;
    t.token_label = "tok";
    t.sentence = "synthetic";
    t.extraction_convention = "synthetic";
    t.states = Matrix(L + 1, d);
    for (std::size_t c2 = 0; c2 < d; ++c2) t.states(0, c2) = x0[c2];
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t c2 = 0; c2 < d; ++c2)
        t.states(l + 1, c2) = t.states(l, c2) + spec.noise_scale * normal(gen) + along_u[l] * u[c2];
    return t;
  };

  for (int k = 0; k < spec.pairs; ++k) {
    std::vector<double> x0(d);
    for (double& x : x0) x = normal(gen);
    std::vector<double> lit_u(L, 0.0);
    std::vector<double> met_u(L, 0.0);

    switch (spec.effect) {
      case Effect::none:
        break;
      case Effect::shared_direction:
        std::fill(met_u.begin(), met_u.end(), spec.effect_strength);
        break;
      case Effect::planted_spread_vs_concentrated: {
        // Equal energy along u: one spike at the zone centre for literal,
        // positive updates over every zone layer for metaphor.
        const double amp = spec.effect_strength * std::exp(0.25 * normal(gen));
        const auto centre = static_cast<std::size_t>(zone_layers[zone_layers.size() / 2]);
        lit_u[centre] = amp;
        std::vector<double> w(zone_layers.size());
        double w_norm = 0.0;
        for (double& x : w) {
          x = std::abs(1.0 + 0.3 * normal(gen));
          w_norm += x * x;
        }
        w_norm = std::sqrt(w_norm);
        for (std::size_t i = 0; i < w.size(); ++i)
          met_u[static_cast<std::size_t>(zone_layers[i])] = amp * w[i] / w_norm;
        break;
      }
    }

    trajstore::MinimalPair p;
    p.pair_id = "syn" + std::to_string(k);
    p.lexeme = "lex" + std::to_string(k);
    p.literal = make(Condition::literal, x0, lit_u);
    p.metaphor = make(Condition::metaphor, x0, met_u);
    ps.pairs.push_back(std::move(p));
  }
  return ps;
}

}  // namespace cse::oracles
