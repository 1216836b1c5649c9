#pragma once

#include <algorithm>
#include <limits>

namespace lyapchain {

template <class F>
GridMin grid_minimize(F&& f, double lo, double hi, int points, int refine_rounds) {
  GridMin best{lo, std::numeric_limits<double>::infinity()};
  double step = (hi - lo) / points;
  for (int i = 0; i <= points; ++i) {
    const double x = lo + step * i;
    const double v = f(x);
    if (v < best.value) best = {x, v};
  }
  for (int round = 0; round < refine_rounds; ++round) {
    const double a = std::max(lo, best.x - step);
    const double b = std::min(hi, best.x + step);
    step /= 4.0;
    for (double x = a; x <= b; x += step) {
      const double v = f(x);
      if (v < best.value) best = {x, v};
    }
  }
  return best;
}

}  // namespace lyapchain
