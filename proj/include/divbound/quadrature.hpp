#pragma once

// Numerical integration: globally adaptive Gauss-Kronrod (7/15) and
// generalized Gauss-Laguerre rules built by Golub-Welsch.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "divbound/error.hpp"
#include "divbound/specfun.hpp"

namespace divbound::quad {

struct QuadOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_intervals = 4000;
  /// Declared integrable endpoint singularities (finite endpoints only).
  bool singular_left = false;
  bool singular_right = false;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// QUADPACK qk15 on [a, b].
template <class F>
Segment gk15(F& f, double a, double b, int& evals) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);
  std::array<double, 7> fv1{}, fv2{};
  for (int j = 0; j < 3; ++j) {
    const int jtw = 2 * j + 1;
    const double dx = half * kXgk[jtw];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kWg[j] * (f1 + f2);
    resk += kWgk[jtw] * (f1 + f2);
    resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
  }
  for (int j = 0; j < 4; ++j) {
    const int jtwm1 = 2 * j;
    const double dx = half * kXgk[jtwm1];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kWgk[jtwm1] * (f1 + f2);
    resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
  }
  evals += 15;
  const double reskh = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  const double result = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, result, err};
}

template <class F>
QuadResult adaptive_finite(F& f, double a, double b, const QuadOptions& opt) {
  QuadResult out;
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b, out.evaluations);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int intervals = 1;
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (total_err > target()) {
    if (intervals >= opt.max_intervals) {
      out.converged = false;
      break;
    }
    const Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      out.converged = false;
      break;
    }
    heap.pop();
    const Segment left = gk15(f, worst.a, mid, out.evaluations);
    const Segment right = gk15(f, mid, worst.b, out.evaluations);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed the drift of the running updates.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.abs_error = err;
  // The running error total drifts; judge stalls by the re-summed one.
  if (!out.converged && err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(sum))) out.converged = true;
  if (!std::isfinite(sum)) out.converged = false;
  return out;
}

}  // namespace detail

/// Adaptive integral of f over [a, b]; either end may be infinite.  Never
/// silent on failure: `converged` is false when the error target was not met.
template <class F>
QuadResult quad_adaptive(F&& f, double a, double b, const QuadOptions& opt = {}) {
  if (std::isnan(a) || std::isnan(b)) fail(Errc::domain_error, "quad_adaptive: NaN limit");
  if (a == b) return {};
  if (a > b) {
    QuadResult r = quad_adaptive(f, b, a, opt);
    r.value = -r.value;
    return r;
  }
  const bool inf_a = std::isinf(a);
  const bool inf_b = std::isinf(b);
  if (inf_a && inf_b) {
    QuadResult l = quad_adaptive(f, -std::numeric_limits<double>::infinity(), 0.0, opt);
    QuadResult r = quad_adaptive(f, 0.0, std::numeric_limits<double>::infinity(), opt);
    return {l.value + r.value, l.abs_error + r.abs_error, l.evaluations + r.evaluations,
            l.converged && r.converged};
  }
  if (inf_b) {
    // x = a + t / (1 - t)
    auto g = [&](double t) {
      const double s = 1.0 - t;
      const double v = f(a + t / s);
      return v == 0.0 ? 0.0 : v / (s * s);
    };
    return detail::adaptive_finite(g, 0.0, 1.0, opt);
  }
  if (inf_a) {
    auto g = [&](double t) {
      const double s = 1.0 - t;
      const double v = f(b - t / s);
      return v == 0.0 ? 0.0 : v / (s * s);
    };
    return detail::adaptive_finite(g, 0.0, 1.0, opt);
  }
  if (opt.singular_left && opt.singular_right) {
    QuadOptions one = opt;
    const double mid = 0.5 * (a + b);
    one.singular_right = false;
    QuadResult l = quad_adaptive(f, a, mid, one);
    one.singular_left = false;
    one.singular_right = true;
    QuadResult r = quad_adaptive(f, mid, b, one);
    return {l.value + r.value, l.abs_error + r.abs_error, l.evaluations + r.evaluations,
            l.converged && r.converged};
  }
  const double w = b - a;
  if (opt.singular_left) {
    // x = a + w u^2 smooths algebraic and logarithmic endpoint singularities.
    auto g = [&](double u) { return 2.0 * w * u * f(a + w * u * u); };
    return detail::adaptive_finite(g, 0.0, 1.0, opt);
  }
  if (opt.singular_right) {
    auto g = [&](double u) { return 2.0 * w * u * f(b - w * u * u); };
    return detail::adaptive_finite(g, 0.0, 1.0, opt);
  }
  return detail::adaptive_finite(f, a, b, opt);
}

/// Same as quad_adaptive but raises QUADRATURE_FAILURE with the achieved
/// error estimate instead of returning an unconverged result.
template <class F>
double integrate(F&& f, double a, double b, const QuadOptions& opt = {}, const char* what = "integral") {
  const QuadResult r = quad_adaptive(f, a, b, opt);
  if (!r.converged) {
    fail(Errc::quadrature_failure, std::string(what) + ": no convergence, value " + std::to_string(r.value) +
                                       " error estimate " + std::to_string(r.abs_error));
  }
  return r.value;
}

// ---------------------------------------------------------------------------
// Log-space integration of sharply peaked positive integrands.

struct LogSpaceResult {
  double log_scale = 0.0;  ///< integral = exp(log_scale) * scaled
  double scaled = 0.0;
  double abs_error = 0.0;  ///< error on `scaled`
  bool converged = true;
  bool truncated_left = false;   ///< support reached the lower search limit
  bool truncated_right = false;  ///< support reached the upper search limit

  double value() const { return std::exp(log_scale) * scaled; }
};

/// Integrates exp(log_f(u)) * weight(u) over [lo, hi], where log_f is
/// unimodal-ish and may spike.  The mode of log_f is located on a coarse grid
/// and refined by golden-section search; the integration range is trimmed to
/// where log_f is within `drop` of its peak and split at the mode.  `weight`
/// must be bounded relative to exp(log_f) on the trimmed support.
template <class LogF, class W>
LogSpaceResult integrate_log_space(LogF&& log_f, W&& weight, double lo, double hi, double search_lo,
                                   double search_hi, const QuadOptions& opt = {}, double drop = 80.0) {
  LogSpaceResult out;
  const double s_lo = std::max(lo, search_lo);
  const double s_hi = std::min(hi, search_hi);
  if (!(s_hi > s_lo)) return out;

  // Coarse scan for the peak.
  constexpr int kGrid = 257;
  double best_u = s_lo;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < kGrid; ++i) {
    const double u = s_lo + (s_hi - s_lo) * i / (kGrid - 1);
    const double v = log_f(u);
    if (v > best) {
      best = v;
      best_u = u;
      best_i = i;
    }
  }
  if (!std::isfinite(best)) {
    if (best == std::numeric_limits<double>::infinity())
      fail(Errc::overflow, "integrate_log_space: integrand overflow");
    return out;  // integrand vanishes on the range
  }
  // Golden-section refinement inside the bracketing cells.
  {
    const double h = (s_hi - s_lo) / (kGrid - 1);
    double a = std::max(s_lo, best_u - h);
    double b = std::min(s_hi, best_u + h);
    constexpr double g = 0.61803398874989484820;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = log_f(c), fd = log_f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = log_f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = log_f(d);
      }
    }
    const double u = 0.5 * (a + b);
    const double v = log_f(u);
    if (v > best) {
      best = v;
      best_u = u;
    }
    (void)best_i;
  }
  out.log_scale = best;

  // Walk outward until the integrand has dropped by `drop`.
  auto find_edge = [&](double dir, double limit, bool& hit) {
    double step = 1e-3 * (1.0 + std::abs(best_u));
    double u = best_u;
    for (int i = 0; i < 4000; ++i) {
      double next = u + dir * step;
      if ((dir > 0 && next >= limit) || (dir < 0 && next <= limit)) {
        hit = (log_f(limit) > best - drop);
        return limit;
      }
      if (log_f(next) < best - drop) return next;
      u = next;
      step *= 1.5;
    }
    hit = true;
    return limit;
  };
  bool hit_lo = false, hit_hi = false;
  const double e_lo = find_edge(-1.0, s_lo, hit_lo);
  const double e_hi = find_edge(+1.0, s_hi, hit_hi);
  out.truncated_left = hit_lo && s_lo == search_lo;
  out.truncated_right = hit_hi && s_hi == search_hi;

  auto g = [&](double u) {
    const double lf = log_f(u);
    if (lf == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(lf - best) * weight(u);
  };
  QuadOptions inner = opt;
  QuadResult left{}, right{};
  if (best_u > e_lo) left = quad_adaptive(g, e_lo, best_u, inner);
  if (e_hi > best_u) right = quad_adaptive(g, best_u, e_hi, inner);
  out.scaled = left.value + right.value;
  out.abs_error = left.abs_error + right.abs_error;
  // A sliver beside the peak may refuse to split; what matters is the total.
  out.converged = (left.converged && right.converged) ||
                  out.abs_error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(out.scaled));
  return out;
}

template <class LogF>
LogSpaceResult integrate_log_space(LogF&& log_f, double lo, double hi, double search_lo, double search_hi,
                                   const QuadOptions& opt = {}, double drop = 80.0) {
  return integrate_log_space(log_f, [](double) { return 1.0; }, lo, hi, search_lo, search_hi, opt, drop);
}

// ---------------------------------------------------------------------------
// Gauss-Laguerre

/// Nodes and weights for int_0^inf y^alpha e^{-y} f(y) dy.
struct GaussLaguerreRule {
  double alpha = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch: eigen-decomposition of the Jacobi matrix of the generalized
/// Laguerre polynomials.
inline GaussLaguerreRule gauss_laguerre_rule(int nodes, double alpha = 0.0) {
  if (nodes < 1) fail(Errc::domain_error, "gauss_laguerre_rule: need at least one node");
  if (!(alpha > -1.0)) fail(Errc::domain_error, "gauss_laguerre_rule: alpha must be > -1");
  Eigen::VectorXd diag(nodes);
  Eigen::VectorXd sub(std::max(nodes - 1, 0));
  for (int k = 0; k < nodes; ++k) diag[k] = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < nodes; ++k) sub[k - 1] = std::sqrt(k * (k + alpha));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) fail(Errc::internal, "gauss_laguerre_rule: eigen solver failed");
  GaussLaguerreRule rule;
  rule.alpha = alpha;
  rule.nodes.resize(nodes);
  rule.weights.resize(nodes);
  const double mu0 = std::exp(specfun::log_gamma(alpha + 1.0));
  for (int k = 0; k < nodes; ++k) {
    rule.nodes[k] = solver.eigenvalues()[k];
    const double v = solver.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v * v;
  }
  return rule;
}

template <class F>
double quad_gauss_laguerre(F&& f, const GaussLaguerreRule& rule) {
  double sum = 0.0;
  // Tail nodes (tiny weights) first so they are not swamped.
  for (std::size_t k = rule.nodes.size(); k-- > 0;) sum += rule.weights[k] * f(rule.nodes[k]);
  return sum;
}

template <class F>
double quad_gauss_laguerre(F&& f, int nodes, double alpha = 0.0) {
  return quad_gauss_laguerre(f, gauss_laguerre_rule(nodes, alpha));
}

}  // namespace divbound::quad
