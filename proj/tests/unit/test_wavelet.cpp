#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cse/error.hpp"
#include "cse/gauss_legendre.hpp"
#include "cse/oracles.hpp"
#include "cse/wavelet.hpp"
#include "support.hpp"

using namespace cse;
using namespace cse::wavelet;
using testsupport::random_signal;
using testsupport::rel_err;

namespace {

const double kPsiHat0 = std::sqrt(2.0 * std::numbers::pi) * std::exp(-12.5);

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("Morlet values") {
  WaveletConfig cfg;
  CHECK(morlet(0.0, cfg) == 1.0);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 100; ++i) {
    const double t = u(gen);
    CHECK(morlet(-t, cfg) == morlet(t, cfg));
    CHECK(morlet(t, cfg) == doctest::Approx(std::exp(-t * t / 2) * std::cos(5 * t)).epsilon(1e-15));
  }
}

TEST_CASE("Morlet integral matches its closed form") {
  WaveletConfig cfg;
  CHECK(morlet_integral(cfg) == doctest::Approx(9.3e-6).epsilon(0.01));
  const double numeric = oracles::adaptive_simpson([&](double t) { return morlet(t, cfg); }, -12.0, 12.0, 1e-14);
  CHECK(rel_err(numeric, kPsiHat0) < 0.01);
  CHECK(rel_err(morlet_integral(cfg), kPsiHat0) < 1e-14);
}

TEST_CASE("interpolant: nodes, midpoints and constant extension") {
  const auto s = contrast::signal_from_updates(1.0, {2.0, -4.0, 1.0});  // 1, 3, -1, 0
  CHECK(interpolant_value(s, 2.0) == -1.0);
  CHECK(interpolant_value(s, 1.5) == 1.0);
  CHECK(interpolant_value(s, 0.25) == 1.5);
  CHECK(interpolant_value(s, -7.0) == 1.0);
  CHECK(interpolant_value(s, 3.0 + 3.0) == 0.0);
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
  for (int n : {4, 8, 16, 32}) {
    const auto rule = gauss_legendre(n);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double q = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) q += rule.weights[i] * std::pow(rule.nodes[i], deg);
      const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
      CHECK(std::abs(q - exact) <= 1e-13);
    }
  }
}

TEST_CASE("zero signal gives an all-zero scalogram") {
  const auto s = contrast::signal_from_updates(0.0, std::vector<double>(12, 0.0));
  for (auto mode : {Mode::faithful, Mode::algebraic}) {
    WaveletConfig cfg;
    cfg.mode = mode;
    const auto sc = cwt(s, cfg);
    CHECK(sc.scales() == 13);
    CHECK(sc.positions() == 13);
    for (double w : sc.W.data()) CHECK(w == 0.0);
  }
}

TEST_CASE("constant input is nearly annihilated") {
  WaveletConfig cfg;
  for (double c : {1.0, -3.5}) {
    const auto s = contrast::signal_from_updates(c, std::vector<double>(24, 0.0));
    const auto sc = cwt(s, cfg);
    for (std::size_t j = 0; j < sc.scales(); ++j) {
      const double a = static_cast<double>(j + 1);
      for (std::size_t b = 0; b < sc.positions(); ++b) {
        CHECK(std::abs(sc.W(j, b)) <= std::abs(c) * std::sqrt(a) * 1e-5);
        CHECK(rel_err(sc.W(j, b), c * std::sqrt(a) * kPsiHat0) < 0.01);
      }
    }
    WaveletConfig alg;
    alg.mode = Mode::algebraic;
    for (double w : cwt(s, alg).W.data()) CHECK(std::abs(w) <= 5e-14 * std::abs(c));
  }
}

TEST_CASE("scalogram cells agree with the adaptive quadrature oracle") {
  std::mt19937_64 gen(21);
  WaveletConfig cfg;
  for (int rep = 0; rep < 2; ++rep) {
    const auto s = random_signal(10, gen);
    const auto sc = cwt(s, cfg);
    double worst = 0.0;
    for (std::size_t j = 0; j < sc.scales(); ++j)
      for (std::size_t b = 0; b < sc.positions(); ++b)
        worst = std::max(worst, rel_err(sc.W(j, b), oracles::cwt_quadrature_oracle(s, j + 1.0, b, 5.0, false, 1e-13)));
    CHECK(worst <= 1e-8);
  }
  const auto s = random_signal(10, gen);
  WaveletConfig alg;
  alg.mode = Mode::algebraic;
  for (double a : {1.0, 4.0, 11.0})
    CHECK(rel_err(cwt_cell(s, a, 3.0, alg), oracles::cwt_quadrature_oracle(s, a, 3.0, 5.0, true, 1e-13)) <= 1e-8);
}

TEST_CASE("negated signal gives the exact negative transform") {
  std::mt19937_64 gen(4);
  const auto s = random_signal(12, gen);
  std::vector<double> neg_delta = s.delta;
  for (double& d : neg_delta) d = -d;
  const auto neg = contrast::signal_from_updates(-s.s.front(), neg_delta);
  WaveletConfig cfg;
  const auto a = cwt(s, cfg);
  const auto b = cwt(neg, cfg);
  for (std::size_t i = 0; i < a.W.data().size(); ++i) CHECK(b.W.data()[i] == -a.W.data()[i]);
}

TEST_CASE("response operator reproduces the direct transform") {
  std::mt19937_64 gen(9);
  for (int L : {4, 12, 24}) {
    const trajstore::ModelGeometry g{"t", L, 1};
    WaveletConfig cfg;
    const auto ops = build_response_operators(g, cfg, 3);
    for (int rep = 0; rep < 3; ++rep) {
      const auto s = random_signal(static_cast<std::size_t>(L), gen);
      for (int b = 0; b <= L; ++b) {
        const auto direct = cwt_column(s, b, cfg);
        const auto z = ops[static_cast<std::size_t>(b)].apply(s.delta, s.s.front());
        double diff = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) diff = std::max(diff, std::abs(z[j] - direct[j]));
        CHECK(diff <= 1e-10 * std::max(1.0, max_abs(direct)));
      }
    }
  }
}

TEST_CASE("unit updates select operator columns") {
  const trajstore::ModelGeometry g{"t", 8, 1};
  WaveletConfig cfg;
  const auto op = build_response_operator(3, g, cfg);
  for (std::size_t l = 0; l < 8; ++l) {
    std::vector<double> e(8, 0.0);
    e[l] = 1.0;
    const auto z = op.apply(e, 0.0);
    for (std::size_t j = 0; j < z.size(); ++j) CHECK(z[j] == op.phi(j, l));
  }
}

TEST_CASE("superposition holds against separate transforms") {
  std::mt19937_64 gen(12);
  const trajstore::ModelGeometry g{"t", 12, 1};
  WaveletConfig cfg;
  const auto op = build_response_operator(5, g, cfg);
  const auto s1 = random_signal(12, gen);
  const auto s2 = random_signal(12, gen);
  const double alpha = 1.7;
  const double beta = -0.4;
  std::vector<double> mix(12);
  for (std::size_t l = 0; l < 12; ++l) mix[l] = alpha * s1.delta[l] + beta * s2.delta[l];
  const auto c1 = cwt_column(contrast::signal_from_updates(0.0, s1.delta), 5, cfg);
  const auto c2 = cwt_column(contrast::signal_from_updates(0.0, s2.delta), 5, cfg);
  const auto cm = cwt_column(contrast::signal_from_updates(0.0, mix), 5, cfg);
  const auto zm = op.apply(mix, 0.0);
  double scale = 1.0;
  for (std::size_t j = 0; j < cm.size(); ++j) scale = std::max({scale, std::abs(c1[j]), std::abs(c2[j])});
  for (std::size_t j = 0; j < cm.size(); ++j) {
    CHECK(std::abs(cm[j] - (alpha * c1[j] + beta * c2[j])) <= 1e-10 * scale);
    CHECK(std::abs(zm[j] - (alpha * c1[j] + beta * c2[j])) <= 1e-10 * scale);
  }
}

TEST_CASE("doubling the quadrature order barely moves any cell") {
  std::mt19937_64 gen(2);
  for (int L : {12, 40}) {
    const auto s = random_signal(static_cast<std::size_t>(L), gen);
    WaveletConfig lo;
    WaveletConfig hi;
    hi.quadrature_order = 32;
    const auto a = cwt(s, lo);
    const auto b = cwt(s, hi);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.W.data().size(); ++i) worst = std::max(worst, rel_err(a.W.data()[i], b.W.data()[i]));
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("algebraic mode drops the constant response") {
  const trajstore::ModelGeometry g{"t", 6, 1};
  WaveletConfig alg;
  alg.mode = Mode::algebraic;
  WaveletConfig faithful;
  const auto a = build_response_operator(2, g, alg);
  const auto f = build_response_operator(2, g, faithful);
  CHECK(a.phi == f.phi);
  for (std::size_t j = 0; j < a.const_response.size(); ++j) {
    CHECK(a.const_response[j] == 0.0);
    CHECK(rel_err(f.const_response[j], std::sqrt(j + 1.0) * kPsiHat0) < 0.01);
  }
}

TEST_CASE("invalid arguments") {
  WaveletConfig cfg;
  const trajstore::ModelGeometry g{"t", 6, 1};
  CHECK_THROWS_AS(build_response_operator(7, g, cfg), Error);
  CHECK_THROWS_AS(build_response_operator(-1, g, cfg), Error);
  cfg.quadrature_order = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  WaveletConfig ok;
  const auto s = contrast::signal_from_updates(0.0, {1.0, 2.0});
  CHECK_THROWS_AS(cwt_cell(s, 0.0, 1.0, ok), Error);
}
