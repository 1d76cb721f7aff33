#pragma once

// Special-function kernel: Lambert W branches, log-gamma family, regularized
// incomplete gamma and beta, error functions, exponential integral and the
// single 2F2 instance needed by the Delta base case.
//
// Everything here is pure and allocation-free.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "divbound/error.hpp"

namespace divbound::specfun {

struct Accuracy {
  double rel_tol = 1e-12;
  int max_iter = 100000;

  /// Iterations run well past the contract tolerance; the contract is what
  /// callers may rely on.
  double stop_tol() const noexcept {
    return std::max(rel_tol * 1e-4, std::numeric_limits<double>::epsilon() * 0.5);
  }
};

struct SpecialConstants {
  static constexpr double euler_mascheroni = 0.57721566490153286060651209008240243;
  static constexpr double inv_e = 0.36787944117144232159552377016146087;
};

inline constexpr double kLnSqrt2Pi = 0.91893853320467274178032973640561764;
inline constexpr double kLn2Pi = 1.83787706640934548356065947281123527;

namespace detail {

inline void check_finite_arg(double x, const char* fn) {
  if (std::isnan(x)) fail(Errc::domain_error, std::string(fn) + ": NaN argument");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// log-gamma family

namespace detail {

// Stirling series remainder lnG(x) - [(x-1/2)ln x - x + ln sqrt(2 pi)], x >= 10.
inline double stirling_tail(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12.0 -
              r2 * (1.0 / 360.0 -
                    r2 * (1.0 / 1260.0 -
                          r2 * (1.0 / 1680.0 -
                                r2 * (1.0 / 1188.0 - r2 * (691.0 / 360360.0 - r2 / 156.0))))));
}

// Lanczos approximation (g = 7, 9 terms), valid for x >= 0.5.
inline double log_gamma_lanczos(double x) {
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  const double xm = x - 1.0;
  double acc = c[0];
  for (int i = 1; i < 9; ++i) acc += c[i] / (xm + i);
  const double t = xm + 7.5;
  return kLnSqrt2Pi + (xm + 0.5) * std::log(t) - t + std::log(acc);
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  detail::check_finite_arg(x, "log_gamma");
  if (!(x > 0.0)) fail(Errc::domain_error, "log_gamma: x must be > 0");
  if (std::isinf(x)) return x;
  if (x >= 10.0) return (x - 0.5) * std::log(x) - x + kLnSqrt2Pi + detail::stirling_tail(x);
  if (x < 0.5) return detail::log_gamma_lanczos(x + 1.0) - std::log(x);
  return detail::log_gamma_lanczos(x);
}

/// lnG(x) - [(x-1/2)ln x - x + ln sqrt(2 pi)].  Small and smooth; used to
/// assemble log prefactors without cancellation.
inline double stirling_error(double x) {
  if (x >= 10.0) return detail::stirling_tail(x);
  return log_gamma(x) - ((x - 0.5) * std::log(x) - x + kLnSqrt2Pi);
}

inline double digamma(double x) {
  detail::check_finite_arg(x, "digamma");
  if (!(x > 0.0)) fail(Errc::domain_error, "digamma: x must be > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double r2 = 1.0 / (x * x);
  const double series =
      r2 * (1.0 / 12.0 -
            r2 * (1.0 / 120.0 -
                  r2 * (1.0 / 252.0 - r2 * (1.0 / 240.0 - r2 * (1.0 / 132.0 - r2 * 691.0 / 32760.0)))));
  return acc + std::log(x) - 0.5 / x - series;
}

inline double trigamma(double x) {
  detail::check_finite_arg(x, "trigamma");
  if (!(x > 0.0)) fail(Errc::domain_error, "trigamma: x must be > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / x;
  const double r2 = r * r;
  // 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
  const double series =
      r * (1.0 + r * 0.5 +
           r * r * (1.0 / 6.0 -
                    r2 * (1.0 / 30.0 -
                          r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * (5.0 / 66.0 - r2 * 691.0 / 2730.0))))));
  return acc + series;
}

/// ln B(a, b) with the large-argument cases assembled from Stirling pieces.
inline double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) fail(Errc::domain_error, "log_beta: a, b must be > 0");
  if (a > b) std::swap(a, b);
  if (b < 10.0) return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  const double s = a + b;
  if (a < 10.0) {
    // lnG(b) - lnG(a+b) = -a ln b - (a+b-1/2) log1p(a/b) + a + e(b) - e(a+b)
    return log_gamma(a) - a * std::log(b) - (s - 0.5) * std::log1p(a / b) + a +
           stirling_error(b) - stirling_error(s);
  }
  return kLnSqrt2Pi + (a - 0.5) * std::log(a / s) + (b - 0.5) * std::log(b / s) - 0.5 * std::log(s) +
         stirling_error(a) + stirling_error(b) - stirling_error(s);
}

/// ln(1+u) - u, accurate for small |u|.
inline double log1pmx(double u) {
  if (!(u > -1.0)) fail(Errc::domain_error, "log1pmx: u must be > -1");
  if (std::abs(u) > 0.25) return std::log1p(u) - u;
  // -u^2/2 + u^3/3 - ...
  double term = -u * u;
  double sum = 0.0;
  for (int k = 2; k < 200; ++k) {
    const double add = term / k;
    sum += add;
    if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
    term *= -u;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma

/// P(x;a) together with its complement Q = 1 - P; whichever is small is
/// computed directly so both are relatively accurate.
struct GammaPair {
  double p;
  double q;
};

namespace detail {

// ln(x^a e^{-x} / Gamma(a))
inline double log_gamma_prefactor(double x, double a) {
  if (a >= 10.0) {
    return a * log1pmx((x - a) / a) + 0.5 * std::log(a / (2.0 * std::numbers::pi)) - stirling_error(a);
  }
  return a * std::log(x) - x - log_gamma(a);
}

}  // namespace detail

inline GammaPair reg_gamma_pair(double x, double a, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "reg_lower_gamma");
  detail::check_finite_arg(a, "reg_lower_gamma");
  if (!(a > 0.0)) fail(Errc::domain_error, "reg_lower_gamma: a must be > 0");
  if (x < 0.0) fail(Errc::domain_error, "reg_lower_gamma: x must be >= 0");
  if (x == 0.0) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};

  const double lp = detail::log_gamma_prefactor(x, a);
  const double tol = acc.stop_tol();
  if (x < a + 1.0) {
    // P = prefactor / a * sum_k prod_{j=1..k} x / (a + j)
    double term = 1.0;
    double sum = 1.0;
    int k = 1;
    for (; k <= acc.max_iter; ++k) {
      term *= x / (a + k);
      sum += term;
      if (term <= tol * sum) break;
    }
    if (k > acc.max_iter) fail(Errc::iteration_limit, "reg_lower_gamma: series did not converge");
    const double p = std::exp(lp + std::log(sum / a));
    return {p, 1.0 - p};
  }
  // Q by modified Lentz on the Legendre continued fraction.
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  int i = 1;
  for (; i <= acc.max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= tol) break;
  }
  if (i > acc.max_iter) fail(Errc::iteration_limit, "reg_upper_gamma: continued fraction did not converge");
  const double q = std::exp(lp + std::log(h));
  return {1.0 - q, q};
}

/// Lower regularized incomplete gamma P(x; a) = gamma(x; a) / Gamma(a).
inline double reg_lower_gamma(double x, double a, const Accuracy& acc = {}) {
  return reg_gamma_pair(x, a, acc).p;
}

inline double reg_upper_gamma(double x, double a, const Accuracy& acc = {}) {
  return reg_gamma_pair(x, a, acc).q;
}

/// P(hi; a) - P(lo; a), using complements when both ends sit in the upper
/// tail so the difference keeps its relative accuracy.
inline double gamma_interval_probability(double lo, double hi, double a, const Accuracy& acc = {}) {
  if (!(hi > lo)) return 0.0;
  lo = std::max(lo, 0.0);
  const GammaPair plo = reg_gamma_pair(lo, a, acc);
  const GammaPair phi = reg_gamma_pair(hi, a, acc);
  const double direct = phi.p - plo.p;
  const double via_q = plo.q - phi.q;
  return (plo.p < plo.q) ? std::max(direct, 0.0) : std::max(via_q, 0.0);
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta

struct BetaPair {
  double i;
  double complement;
};

namespace detail {

// Continued fraction for I(x;a,b) (Numerical Recipes betacf, modified Lentz).
inline double beta_cf(double x, double a, double b, const Accuracy& acc) {
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  const double tol = acc.stop_tol();
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  int m = 1;
  for (; m <= acc.max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= tol) break;
  }
  if (m > acc.max_iter) fail(Errc::iteration_limit, "reg_inc_beta: continued fraction did not converge");
  return h;
}

// x^a (1-x)^b / (a B(a,b)) * cf, with ln(1-x) passed separately for accuracy.
inline double beta_front_cf(double x, double log_x, double log_1mx, double a, double b,
                            const Accuracy& acc) {
  const double lfront = a * log_x + b * log_1mx - log_beta(a, b) - std::log(a);
  return std::exp(lfront) * beta_cf(x, a, b, acc);
}

}  // namespace detail

/// I(x; a, b) and 1 - I(x; a, b).  `one_minus_x` may be supplied when the
/// caller knows 1 - x more accurately than the subtraction would give.
inline BetaPair reg_inc_beta_pair(double x, double a, double b, const Accuracy& acc = {},
                                  double one_minus_x = std::numeric_limits<double>::quiet_NaN()) {
  detail::check_finite_arg(x, "reg_inc_beta");
  if (!(a > 0.0) || !(b > 0.0)) fail(Errc::domain_error, "reg_inc_beta: a, b must be > 0");
  if (x < 0.0 || x > 1.0) fail(Errc::domain_error, "reg_inc_beta: x must lie in [0, 1]");
  const double y = std::isnan(one_minus_x) ? 1.0 - x : one_minus_x;
  if (x == 0.0) return {0.0, 1.0};
  if (y == 0.0) return {1.0, 0.0};
  const double log_x = (x < 0.5) ? std::log(x) : std::log1p(-y);
  const double log_y = (y < 0.5) ? std::log(y) : std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double v = detail::beta_front_cf(x, log_x, log_y, a, b, acc);
    return {v, 1.0 - v};
  }
  const double w = detail::beta_front_cf(y, log_y, log_x, b, a, acc);
  return {1.0 - w, w};
}

/// Regularized incomplete beta I(x; a, b) = B(x; a, b) / B(a, b).
inline double reg_inc_beta(double x, double a, double b, const Accuracy& acc = {}) {
  return reg_inc_beta_pair(x, a, b, acc).i;
}

// ---------------------------------------------------------------------------
// Error functions, exponential integral, 2F2

inline double erf(double x) { return std::erf(x); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// erfi(x) = -i erf(ix) = 2/sqrt(pi) sum x^(2k+1) / (k! (2k+1)).
/// All terms are positive, so the series is accurate wherever the result is
/// representable; beyond that an overflow error is raised.
inline double erfi(double x, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "erfi");
  if (x == 0.0) return 0.0;
  if (x < 0.0) return -erfi(-x, acc);
  const double x2 = x * x;
  if (x2 > 700.0) fail(Errc::overflow, "erfi: result exceeds double range");
  double p = x;  // x^(2k+1) / k!
  double sum = x;
  const double tol = acc.stop_tol();
  int k = 0;
  for (; k < acc.max_iter; ++k) {
    p *= x2 / (k + 1);
    const double term = p / (2 * k + 3);
    sum += term;
    if (term <= tol * sum && k > x2) break;
  }
  if (k >= acc.max_iter) fail(Errc::iteration_limit, "erfi: series did not converge");
  return sum * 2.0 / std::sqrt(std::numbers::pi);
}

/// 2F2(1, 1; 3/2, 2; x) = sum_k x^k / ((3/2)_k (k+1)),  x >= 0.
inline double hyp2f2_11_32_2(double x, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "hyp2f2_11_32_2");
  if (x < 0.0) fail(Errc::domain_error, "hyp2f2_11_32_2: x must be >= 0");
  if (x > 700.0) fail(Errc::overflow, "hyp2f2_11_32_2: result exceeds double range");
  double p = 1.0;  // x^k / (3/2)_k
  double sum = 1.0;
  const double tol = acc.stop_tol();
  int k = 0;
  for (; k < acc.max_iter; ++k) {
    p *= x / (1.5 + k);
    const double term = p / (k + 2);
    sum += term;
    if (term <= tol * sum && k > x) break;
  }
  if (k >= acc.max_iter) fail(Errc::iteration_limit, "hyp2f2_11_32_2: series did not converge");
  if (!std::isfinite(sum)) fail(Errc::overflow, "hyp2f2_11_32_2: result exceeds double range");
  return sum;
}

/// e^x E1(x) for x > 0.  Finite for every x > 0, no overflow.
inline double expint_e1_scaled(double x, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "expint_e1");
  if (!(x > 0.0)) fail(Errc::domain_error, "expint_e1: x must be > 0");
  const double tol = acc.stop_tol();
  if (x <= 1.0) {
    // E1 = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double term = 1.0;
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
      term *= -x / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) <= tol * std::abs(sum)) break;
    }
    return std::exp(x) * (-SpecialConstants::euler_mascheroni - std::log(x) - sum);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  int i = 1;
  for (; i <= acc.max_iter; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) <= tol) break;
  }
  if (i > acc.max_iter) fail(Errc::iteration_limit, "expint_e1: continued fraction did not converge");
  return h;
}

/// Ei(x) = int_{-inf}^x e^t / t dt for x < 0, i.e. -E1(-x).
inline double expint_ei(double x, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "expint_ei");
  if (!(x < 0.0)) fail(Errc::domain_error, "expint_ei: only x < 0 is supported");
  return -std::exp(x) * expint_e1_scaled(-x, acc);
}

// ---------------------------------------------------------------------------
// Lambert W

namespace detail {

inline constexpr double kBranchSlack = 1e-15;

inline double halley_step(double w, double x) {
  const double ew = std::exp(w);
  const double f = w * ew - x;
  const double wp1 = w + 1.0;
  if (wp1 == 0.0) return w;
  return w - f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
}

// Solve w e^w = x on [lo, hi] by bisection; w e^w is monotone on each branch.
inline double lambert_bisect(double x, double lo, double hi, bool increasing) {
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double f = mid * std::exp(mid) - x;
    if ((f < 0.0) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double branch_p(double x) {
  // sqrt(2 (1 + e x)) with 1 + e x >= 0
  const double s = std::fma(std::numbers::e, x, 1.0);
  return std::sqrt(std::max(0.0, 2.0 * s));
}

inline bool roundtrip_ok(double w, double x, double tol) {
  const double r = w * std::exp(w);
  return std::abs(r - x) <= tol * std::max(std::abs(x), 1e-300);
}

}  // namespace detail

/// Principal branch W0 on [-1/e, inf).
inline double lambert_w0(double x, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "lambert_w0");
  const double branch = -SpecialConstants::inv_e;
  if (x < branch) {
    if (x >= branch * (1.0 + detail::kBranchSlack)) return -1.0;
    fail(Errc::domain_error, "lambert_w0: x < -1/e");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w;
  if (x < -0.25) {
    const double p = detail::branch_p(x);
    if (p == 0.0) return -1.0;
    w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0));
  } else if (x < 3.0) {
    const double l = std::log1p(x);
    w = l * (1.0 - std::log1p(l) / (2.0 + l));
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  const double tol = acc.stop_tol();
  for (int i = 0; i < 100; ++i) {
    const double next = detail::halley_step(w, x);
    const bool done = std::abs(next - w) <= tol * (1.0 + std::abs(next));
    w = std::max(next, -1.0);
    if (done) break;
  }
  if (!detail::roundtrip_ok(w, x, std::max(acc.rel_tol, 1e-14)) && x > -0.36) {
    const double hi = x > 1.0 ? std::log(x) + 1.0 : std::max(x, 1.0);
    w = detail::lambert_bisect(x, -1.0, hi, true);
  }
  return w;
}

/// Lower branch W_{-1} on [-1/e, 0).
inline double lambert_wm1(double x, const Accuracy& acc = {}) {
  detail::check_finite_arg(x, "lambert_wm1");
  const double branch = -SpecialConstants::inv_e;
  if (x < branch) {
    if (x >= branch * (1.0 + detail::kBranchSlack)) return -1.0;
    fail(Errc::domain_error, "lambert_wm1: x < -1/e");
  }
  if (!(x < 0.0)) fail(Errc::domain_error, "lambert_wm1: x must be < 0");

  const double tol = acc.stop_tol();
  if (x < -0.25) {
    const double p = -detail::branch_p(x);
    if (p == 0.0) return -1.0;
    double w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0));
    for (int i = 0; i < 100; ++i) {
      const double next = std::min(detail::halley_step(w, x), -1.0);
      const bool done = std::abs(next - w) <= tol * (1.0 + std::abs(next));
      w = next;
      if (done) break;
    }
    if (!detail::roundtrip_ok(w, x, std::max(acc.rel_tol, 1e-14))) {
      w = detail::lambert_bisect(x, -10.0, -1.0, false);
    }
    return w;
  }
  // Away from the branch point solve w + ln(-w) = ln(-x) by Newton; this form
  // stays representable even when x is tiny.
  const double lx = std::log(-x);
  const double l2 = std::log(-lx);
  double w = lx - l2 + l2 / lx;
  bool converged = false;
  for (int i = 0; i < 100; ++i) {
    const double g = w + std::log(-w) - lx;
    const double next = std::min(w - g / (1.0 + 1.0 / w), -1.0);
    const bool done = std::abs(next - w) <= tol * (1.0 + std::abs(next));
    w = next;
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    double lo = std::min(-1.0, 2.0 * lx) - 1.0;
    double hi = -1.0;
    for (int i = 0; i < 2000; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (mid + std::log(-mid) - lx > 0.0)
        hi = mid;
      else
        lo = mid;
    }
    w = 0.5 * (lo + hi);
  }
  return w;
}

}  // namespace divbound::specfun
