#pragma once

#include "fairdiv/core_model.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace fairdiv::testing {

// Best value of a concave function of the split fraction: grid at 1e-4, then
// ternary search inside the best cell's neighbourhood.
inline double maximize_split(const std::function<double(double)>& f) {
  constexpr int kSteps = 10000;
  double best_x = 0.0, best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kSteps; ++k) {
    const double x = static_cast<double>(k) / kSteps;
    const double v = f(x);
    if (v > best) best = v, best_x = x;
  }
  double lo = std::max(0.0, best_x - 1.0 / kSteps), hi = std::min(1.0, best_x + 1.0 / kSteps);
  for (int it = 0; it < 100; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (f(m1) < f(m2)) lo = m1; else hi = m2;
  }
  return std::max(best, f(0.5 * (lo + hi)));
}

// Enumerates every owner assignment with at most one good split between the
// two agents. objective maps the utilities (U_1, U_2) to the value maximized.
inline double brute_force(const Matrix& u, const std::function<double(double, double)>& objective) {
  const int q = static_cast<int>(u.cols());
  double best = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << q); ++mask) {
    double u1 = 0.0, u2 = 0.0;
    for (int a = 0; a < q; ++a) {
      if (mask >> a & 1) u1 += u(0, a);
      else u2 += u(1, a);
    }
    best = std::max(best, objective(u1, u2));
    for (int s = 0; s < q; ++s) {
      // Good s is split; the rest follow the mask.
      const double base1 = u1 - ((mask >> s & 1) ? u(0, s) : 0.0);
      const double base2 = u2 - ((mask >> s & 1) ? 0.0 : u(1, s));
      best = std::max(best, maximize_split([&](double x) {
        return objective(base1 + x * u(0, s), base2 + (1 - x) * u(1, s));
      }));
    }
  }
  return best;
}

}  // namespace fairdiv::testing
