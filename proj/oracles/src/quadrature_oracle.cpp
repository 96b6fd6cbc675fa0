#include <cmath>
#include <numbers>

#include "cse/error.hpp"
#include "cse/oracles.hpp"

namespace cse::oracles {
namespace {

struct Budget {
  long left;
};

double simpson_step(const std::function<double(double)>& f, double lo, double hi, double f_lo, double f_mid,
                    double f_hi, double whole, double tol, int depth, Budget& budget) {
  const double mid = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + mid);
  const double rm = 0.5 * (mid + hi);
  const double f_lm = f(lm);
  const double f_rm = f(rm);
  budget.left -= 2;
  if (budget.left < 0) throw Error(ErrorKind::not_converged, "adaptive quadrature exhausted its budget");
  const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lm + f_mid);
  const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_hi);
  const double halves = left + right;
  const double diff = halves - whole;
  if (depth >= 60 || (depth >= 3 && std::abs(diff) <= 15.0 * tol)) return halves + diff / 15.0;
  return simpson_step(f, lo, mid, f_lo, f_lm, f_mid, left, 0.5 * tol, depth + 1, budget) +
         simpson_step(f, mid, hi, f_mid, f_rm, f_hi, right, 0.5 * tol, depth + 1, budget);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double abs_tol,
                        long max_evals) {
  if (hi <= lo) return 0.0;
  Budget budget{max_evals - 3};
  const double f_lo = f(lo);
  const double f_mid = f(0.5 * (lo + hi));
  const double f_hi = f(hi);
  const double whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
  return simpson_step(f, lo, hi, f_lo, f_mid, f_hi, whole, abs_tol, 0, budget);
}

double cwt_quadrature_oracle(const contrast::ProjectedSignal& s, double a, double b, double omega0, bool algebraic,
                             double abs_tol) {
  if (!(a > 0.0)) throw Error(ErrorKind::invalid_argument, "oracle scale must be positive");
  const auto& x = s.s;
  const double last = static_cast<double>(x.size() - 1);
  auto signal = [&](double t) {
    if (t <= 0.0) return x.front();
    if (t >= last) return x.back();
    const auto k = static_cast<std::size_t>(t);
    const double w = t - static_cast<double>(k);
    return (1.0 - w) * x[k] + w * x[k + 1];
  };
  auto integrand = [&](double t) {
    const double u = (t - b) / a;
    return signal(t) * std::exp(-u * u / 2.0) * std::cos(omega0 * u);
  };

  // Beyond 12 scales the envelope is below e^-72.
  const double lo = b - 12.0 * a;
  const double hi = b + 12.0 * a;
  std::vector<double> cuts{lo};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = static_cast<double>(k);
    if (t > lo && t < hi) cuts.push_back(t);
  }
  cuts.push_back(hi);

  const double per_unit_tol = abs_tol * std::sqrt(a) / (hi - lo);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // Chunks no longer than a fifth of the oscillation period.
    const double len = cuts[i + 1] - cuts[i];
    const auto n = static_cast<long>(std::ceil(len / (0.25 * a)));
    for (long c = 0; c < n; ++c) {
      const double c_lo = cuts[i] + len * static_cast<double>(c) / static_cast<double>(n);
      const double c_hi = c + 1 == n ? cuts[i + 1] : cuts[i] + len * static_cast<double>(c + 1) / static_cast<double>(n);
      total += adaptive_simpson(integrand, c_lo, c_hi, per_unit_tol * (c_hi - c_lo));
    }
  }
  double w = total / std::sqrt(a);
  if (algebraic) w -= x.front() * std::sqrt(a) * std::sqrt(2.0 * std::numbers::pi) * std::exp(-omega0 * omega0 / 2.0);
  return w;
}

double t_upper_tail_quadrature(double t, double dof) {
  const double log_c = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) - 0.5 * std::log(dof * std::numbers::pi);
  auto density = [&](double x) { return std::exp(log_c - (dof + 1.0) / 2.0 * std::log1p(x * x / dof)); };
  const double central = adaptive_simpson(density, 0.0, std::abs(t), 1e-15);
  return t >= 0.0 ? 0.5 - central : 0.5 + central;
}

}  // namespace cse::oracles
