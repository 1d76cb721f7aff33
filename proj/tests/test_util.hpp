#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace divbound::testing {

inline double rel_err(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

/// Plain bisection on a sign change; test-side root oracle.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Composite Gauss-Legendre (10 points per panel) on a uniform grid; a
/// deliberately simple oracle that shares no code with the adaptive rule.
inline double gauss_legendre_panels(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
  static const double w[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    const double r = 0.5 * h;
    for (int k = 0; k < 5; ++k) sum += w[k] * r * (f(c - r * x[k]) + f(c + r * x[k]));
  }
  return sum;
}

inline std::vector<double> uniform_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace divbound::testing
