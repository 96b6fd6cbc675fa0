#include "cse/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "cse/error.hpp"
#include "cse/gauss_legendre.hpp"

namespace cse::wavelet {
namespace {

struct Window {
  long first;  // first unit segment [first, first + 1]
  long last;   // one past the last segment
};

Window window_for(double a, double b, std::size_t layers, const WaveletConfig& cfg) {
  const double lo = std::min(0.0, b - cfg.tail_halfwidth * a);
  const double hi = std::max(static_cast<double>(layers), b + cfg.tail_halfwidth * a);
  return {static_cast<long>(std::floor(lo)), static_cast<long>(std::ceil(hi))};
}

// Per-segment moments of the scaled wavelet over [k, k + 1]:
//   m0[k] = integral psi((t - b)/a) dt,  m1[k] = integral (t - k) psi((t - b)/a) dt.
struct SegmentMoments {
  Window window;
  std::vector<double> m0;
  std::vector<double> m1;
};

SegmentMoments segment_moments(double a, double b, std::size_t layers, const WaveletConfig& cfg,
                               const GaussLegendreRule& rule) {
  SegmentMoments m;
  m.window = window_for(a, b, layers, cfg);
  const auto n = static_cast<std::size_t>(m.window.last - m.window.first);
  m.m0.resize(n);
  m.m1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(m.window.first + static_cast<long>(i));
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double frac = 0.5 * (rule.nodes[q] + 1.0);
      const double w = 0.5 * rule.weights[q] * morlet((k + frac - b) / a, cfg);
      s0 += w;
      s1 += w * frac;
    }
    m.m0[i] = s0;
    m.m1[i] = s1;
  }
  return m;
}

void check_signal(const ProjectedSignal& s) {
  if (s.s.size() < 3) throw Error(ErrorKind::invalid_argument, "CWT needs L >= 2");
  for (double v : s.s)
    if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "signal contains non-finite values");
}

}  // namespace

void WaveletConfig::validate() const {
  if (!(omega0 > 0.0)) throw Error(ErrorKind::invalid_argument, "omega0 must be positive");
  if (quadrature_order < 4) throw Error(ErrorKind::invalid_argument, "quadrature_order must be >= 4");
  if (!(tail_halfwidth >= 6.0)) throw Error(ErrorKind::invalid_argument, "tail_halfwidth must be >= 6");
}

double morlet(double t, const WaveletConfig& cfg) { return std::exp(-0.5 * t * t) * std::cos(cfg.omega0 * t); }

double morlet_integral(const WaveletConfig& cfg) {
  return std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * cfg.omega0 * cfg.omega0);
}

double interpolant_value(const ProjectedSignal& s, double t) {
  const std::size_t last = s.s.size() - 1;
  if (t <= 0.0) return s.s.front();
  if (t >= static_cast<double>(last)) return s.s.back();
  const double fl = std::floor(t);
  const auto k = static_cast<std::size_t>(fl);
  const double frac = t - fl;
  if (frac == 0.0) return s.s[k];
  return s.s[k] + frac * (s.s[k + 1] - s.s[k]);
}

double cwt_cell(const ProjectedSignal& s, double a, double b, const WaveletConfig& cfg) {
  cfg.validate();
  check_signal(s);
  if (!(a > 0.0)) throw Error(ErrorKind::invalid_argument, "scale must be positive");
  const auto rule = gauss_legendre(cfg.quadrature_order);
  const std::size_t layers = s.s.size() - 1;
  const auto win = window_for(a, b, layers, cfg);
  double sum = 0.0;
  for (long k = win.first; k < win.last; ++k) {
    double seg = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = static_cast<double>(k) + 0.5 * (rule.nodes[q] + 1.0);
      seg += rule.weights[q] * interpolant_value(s, t) * morlet((t - b) / a, cfg);
    }
    sum += 0.5 * seg;
  }
  double w = sum / std::sqrt(a);
  if (cfg.mode == Mode::algebraic) w -= s.s.front() * std::sqrt(a) * morlet_integral(cfg);
  return w;
}

std::vector<double> cwt_column(const ProjectedSignal& s, int b, const WaveletConfig& cfg) {
  check_signal(s);
  const std::size_t n_scales = s.s.size();
  std::vector<double> col(n_scales);
  for (std::size_t j = 0; j < n_scales; ++j) col[j] = cwt_cell(s, static_cast<double>(j + 1), b, cfg);
  return col;
}

Scalogram cwt(const ProjectedSignal& s, const WaveletConfig& cfg) {
  check_signal(s);
  const std::size_t n = s.s.size();
  Scalogram out{Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const auto col = cwt_column(s, static_cast<int>(k), cfg);
    for (std::size_t j = 0; j < n; ++j) out.W(j, k) = col[j];
  }
  return out;
}

std::vector<double> ResponseOperator::apply(std::span<const double> delta, double s0) const {
  if (delta.size() != phi.cols())
    throw Error(ErrorKind::dimension_mismatch, "update vector length does not match the operator");
  std::vector<double> z(phi.rows());
  for (std::size_t j = 0; j < phi.rows(); ++j) {
    double acc = 0.0;
    for (std::size_t l = 0; l < phi.cols(); ++l) acc += phi(j, l) * delta[l];
    z[j] = acc + s0 * const_response[j];
  }
  return z;
}

ResponseOperator build_response_operator(int b, const trajstore::ModelGeometry& geometry,
                                         const WaveletConfig& cfg) {
  cfg.validate();
  geometry.validate();
  if (b < 0 || b > geometry.layers)
    throw Error(ErrorKind::out_of_range, "position b=" + std::to_string(b) + " outside [0, L]");
  const auto layers = static_cast<std::size_t>(geometry.layers);
  const std::size_t n_scales = layers + 1;
  const auto rule = gauss_legendre(cfg.quadrature_order);

  ResponseOperator op;
  op.b = b;
  op.phi = Matrix(n_scales, layers);
  op.const_response.assign(n_scales, 0.0);
  for (std::size_t j = 0; j < n_scales; ++j) {
    const double a = static_cast<double>(j + 1);
    const auto m = segment_moments(a, b, layers, cfg, rule);
    const double norm = 1.0 / std::sqrt(a);
    // tail[i] = sum of m0 over segments i..end, accumulated right to left.
    std::vector<double> tail(m.m0.size() + 1, 0.0);
    for (std::size_t i = m.m0.size(); i-- > 0;) tail[i] = tail[i + 1] + m.m0[i];
    // Unit update at layer l: ramp from 0 at t = l to 1 at t = l + 1, then 1.
    for (std::size_t l = 0; l < layers; ++l) {
      const auto i = static_cast<std::size_t>(static_cast<long>(l) - m.window.first);
      op.phi(j, l) = norm * (m.m1[i] + tail[i + 1]);
    }
    if (cfg.mode == Mode::faithful) op.const_response[j] = norm * tail[0];
  }
  return op;
}

std::vector<ResponseOperator> build_response_operators(const trajstore::ModelGeometry& geometry,
                                                       const WaveletConfig& cfg, unsigned threads) {
  cfg.validate();
  geometry.validate();
  const std::size_t n = geometry.positions();
  std::vector<ResponseOperator> ops(n);
  const unsigned n_workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  auto work = [&](unsigned w) {
    for (std::size_t b = w; b < n; b += n_workers) ops[b] = build_response_operator(static_cast<int>(b), geometry, cfg);
  };
  if (n_workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
  }
  return ops;
}

}  // namespace cse::wavelet
