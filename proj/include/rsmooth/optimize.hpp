#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rsmooth {

struct ScalarMaximum {
  double argmax = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

/// Golden-section search for the maximum of a unimodal f on [a, b].
template <typename F>
ScalarMaximum golden_section_maximize(F&& f, double a, double b, double tol = 1e-9,
                                      int max_iterations = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iterations && std::abs(b - a) > tol; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

/// Maximizes f over [lo, hi] (lo > 0) by scanning a logarithmic grid and then
/// refining the best grid cell's neighbourhood with golden-section search.
/// Non-finite objective values are treated as -inf, so f may return NaN
/// outside its feasible region. Both endpoints are always evaluated because
/// the supremum can sit on the boundary.
template <typename F>
ScalarMaximum grid_refine_maximize(F&& f, double lo, double hi, std::size_t grid_points = 1024,
                                   double tol = 1e-9) {
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("grid_refine_maximize: need 0 < lo < hi");
  if (grid_points < 3) grid_points = 3;

  auto safe = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / static_cast<double>(grid_points - 1);
  std::vector<double> xs(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    xs[i] = std::exp(log_lo + step * static_cast<double>(i));
  }
  xs.front() = lo;
  xs.back() = hi;

  ScalarMaximum best;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double v = safe(xs[i]);
    if (v > best.value) {
      best = {xs[i], v};
      best_index = i;
    }
  }
  if (best.value == -std::numeric_limits<double>::infinity()) return best;

  const double left = xs[best_index == 0 ? 0 : best_index - 1];
  const double right = xs[best_index + 1 == grid_points ? best_index : best_index + 1];
  const ScalarMaximum refined = golden_section_maximize(safe, left, right, tol);
  if (refined.value > best.value) best = refined;
  return best;
}

}  // namespace rsmooth
