#pragma once

#include <span>
#include <vector>

#include "cse/contrast.hpp"
#include "cse/matrix.hpp"
#include "cse/trajstore.hpp"

// Real Morlet continuous wavelet transform of the piecewise-linear
// interpolant of a projected signal, evaluated at integer scales 1..L+1 and
// integer positions 0..L, plus the linear response operator that maps
// projected updates to one scalogram column.
//
// The transform integrates
//     W(a, b) = a^{-1/2} * integral s~(t) psi((t - b) / a) dt
// against the exact interpolant using fixed-order Gauss-Legendre rules on
// unit segments, so kinks of s~ always sit on segment boundaries. The
// integration window is [min(0, b - T a), max(L, b + T a)].
namespace cse::wavelet {

using contrast::ProjectedSignal;

enum class Mode {
  faithful,   // keeps the s(0) * sqrt(a) * psi_hat(0) residual
  algebraic,  // subtracts the closed-form constant response, so constants map to 0
};

struct WaveletConfig {
  double omega0 = 5.0;
  int quadrature_order = 16;   // nodes per unit segment
  double tail_halfwidth = 8.0; // T, in multiples of the scale
  Mode mode = Mode::faithful;

  void validate() const;
};

double morlet(double t, const WaveletConfig& cfg);

// Closed form of the integral of psi over the real line: sqrt(2 pi) exp(-omega0^2 / 2).
double morlet_integral(const WaveletConfig& cfg);

// Piecewise-linear on [0, L], constant s(0) / s(L) outside.
double interpolant_value(const ProjectedSignal& s, double t);

// One cell W(a, b) for real a > 0 and any real b.
double cwt_cell(const ProjectedSignal& s, double a, double b, const WaveletConfig& cfg);

struct Scalogram {
  Matrix W;  // S x (L+1), W(j-1, k) = W(a = j, b = k)

  std::size_t scales() const noexcept { return W.rows(); }
  std::size_t positions() const noexcept { return W.cols(); }
  double energy(std::size_t j, std::size_t k) const { return W(j, k) * W(j, k); }
};

Scalogram cwt(const ProjectedSignal& s, const WaveletConfig& cfg);

// Column b of the scalogram: W(a_j, b) for j = 1..L+1.
std::vector<double> cwt_column(const ProjectedSignal& s, int b, const WaveletConfig& cfg);

struct ResponseOperator {
  int b = 0;
  Matrix phi;                           // S x L
  std::vector<double> const_response;   // response to the all-ones signal

  // z = phi * delta + s0 * const_response.
  std::vector<double> apply(std::span<const double> delta, double s0) const;
};

ResponseOperator build_response_operator(int b, const trajstore::ModelGeometry& geometry,
                                         const WaveletConfig& cfg);

// Operators for every position 0..L.
std::vector<ResponseOperator> build_response_operators(const trajstore::ModelGeometry& geometry,
                                                       const WaveletConfig& cfg, unsigned threads = 1);

}  // namespace cse::wavelet
