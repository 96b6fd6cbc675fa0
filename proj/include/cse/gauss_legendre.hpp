#pragma once

#include <vector>

namespace cse {

// n-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree <= 2n-1.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(int n);

}  // namespace cse
