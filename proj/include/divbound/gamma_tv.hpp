#pragma once

// Total variation between two products of independent Gamma laws through the
// normal approximation of the log-likelihood ratio, with a Berry-Esseen
// error interval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "divbound/bounds.hpp"
#include "divbound/error.hpp"
#include "divbound/parallel.hpp"
#include "divbound/quadrature.hpp"
#include "divbound/specfun.hpp"

namespace divbound::gamma_tv {

inline constexpr double kDefaultC0 = 0.56;

/// Component i: X ~ Gamma(alpha_i, rate lambda_i) under the first law and
/// Gamma(beta_i, rate mu_i) under the second.
struct GammaProductSpec {
  std::vector<double> alpha, beta, lambda, mu;

  std::size_t size() const { return alpha.size(); }

  void validate() const {
    const std::size_t n = alpha.size();
    if (n == 0) fail(Errc::domain_error, "gamma spec: no components");
    if (beta.size() != n || lambda.size() != n || mu.size() != n)
      fail(Errc::domain_error, "gamma spec: alpha, beta, lambda, mu must have equal lengths");
    for (const auto* v : {&alpha, &beta, &lambda, &mu})
      for (double x : *v)
        if (!(x > 0.0) || !std::isfinite(x)) fail(Errc::domain_error, "gamma spec: entries must be positive and finite");
  }

  GammaProductSpec swapped() const { return {beta, alpha, mu, lambda}; }

  bool identical() const { return alpha == beta && lambda == mu; }

  static GammaProductSpec iid(std::size_t n, double a, double b, double l, double m) {
    return {std::vector<double>(n, a), std::vector<double>(n, b), std::vector<double>(n, l), std::vector<double>(n, m)};
  }
};

namespace detail {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double sum(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value();
}

// h(u) = a u + b e^u - level, u = ln x.
struct LevelFunction {
  double a, b, level;
  double operator()(double u) const { return a * u + b * std::exp(u) - level; }
};

inline double refine(const LevelFunction& h, double lo, double hi) {
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(h, lo, hi, h(lo), h(hi),
                                                   boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

// Walks from `from` in direction `dir` (doubling steps) until h changes sign
// relative to h(from); returns the root or NaN when none is found.
inline double root_from(const LevelFunction& h, double from, double dir) {
  constexpr double kRightCap = 700.0;
  constexpr double kLeftCap = -1e7;
  const double h0 = h(from);
  if (h0 == 0.0) return from;
  double prev = from;
  for (double step = 1.0;; step *= 2.0) {
    double u = from + dir * step;
    u = std::clamp(u, kLeftCap, kRightCap);
    const double hu = h(u);
    if ((hu > 0.0) != (h0 > 0.0) || hu == 0.0) return dir > 0 ? refine(h, prev, u) : refine(h, u, prev);
    if (u == kLeftCap || u == kRightCap) return std::numeric_limits<double>::quiet_NaN();
    prev = u;
  }
}

}  // namespace detail

/// Solutions u = ln x of a ln x + b x = level, sorted (at most two).
inline std::vector<double> level_crossings(double a, double b, double level) {
  std::vector<double> roots;
  if (a == 0.0 && b == 0.0) return roots;
  const detail::LevelFunction h{a, b, level};
  if (b == 0.0) {
    roots.push_back(level / a);
    return roots;
  }
  if (a == 0.0) {
    if (level / b > 0.0) roots.push_back(std::log(level / b));
    return roots;
  }
  if ((a > 0.0) == (b > 0.0)) {
    // Monotone in u with opposite limits: exactly one root.
    const double r1 = detail::root_from(h, 0.0, (h(0.0) > 0.0) == (a > 0.0) ? -1.0 : 1.0);
    if (std::isfinite(r1)) roots.push_back(r1);
    return roots;
  }
  const double crit = std::log(-a / b);
  if (h(crit) == 0.0) {
    roots.push_back(crit);
    return roots;
  }
  for (double dir : {-1.0, 1.0}) {
    const double r = detail::root_from(h, crit, dir);
    if (std::isfinite(r)) roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// c = sum [ln Gamma(alpha) + beta ln mu - ln Gamma(beta) - alpha ln lambda].
inline double threshold_c(const GammaProductSpec& spec) {
  spec.validate();
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    s.add(specfun::log_gamma(spec.alpha[i]) - specfun::log_gamma(spec.beta[i]));
    s.add(spec.beta[i] * std::log(spec.mu[i]) - spec.alpha[i] * std::log(spec.lambda[i]));
  }
  return s.value();
}

struct MomentSummary {
  std::vector<double> mean_z, var_z, rho;
  std::vector<double> mean_zt, var_zt, rho_t;
  double kappa = 0.0;
  double kappa_t = 0.0;
  double log_c_threshold = 0.0;
};

/// E|a ln X + b X - center|^3 for X ~ Gamma(shape, rate), split at the level crossings.
inline double third_abs_moment(double a, double b, double center, double shape, double rate) {
  if (a == 0.0 && b == 0.0) return std::abs(center) * center * center;
  const double lg = specfun::log_gamma(shape);
  const double lr = std::log(rate);
  auto log_dens = [&](double u) { return shape * (u + lr) - rate * std::exp(u) - lg; };
  const detail::LevelFunction h{a, b, center};
  auto weight = [&](double u) {
    const double v = h(u);
    return std::abs(v) * v * v;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cuts{-kInf};
  for (double r : level_crossings(a, b, center)) cuts.push_back(r);
  cuts.push_back(kInf);
  const double peak = std::log(shape / rate);
  const double search_lo = peak - 120.0 / shape - 60.0;
  const double search_hi = peak + 60.0;
  quad::QuadOptions opt;
  opt.rel_tol = 1e-11;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const auto r = quad::integrate_log_space(log_dens, weight, cuts[k], cuts[k + 1], search_lo, search_hi, opt);
    if (!r.converged)
      fail(Errc::quadrature_failure, "gamma_tv: third absolute moment did not converge, error " + std::to_string(r.abs_error));
    total += r.value();
  }
  return total;
}

inline MomentSummary moments(const GammaProductSpec& spec, unsigned threads = 0) {
  spec.validate();
  const std::size_t n = spec.size();
  MomentSummary m;
  m.mean_z.resize(n), m.var_z.resize(n), m.rho.resize(n);
  m.mean_zt.resize(n), m.var_zt.resize(n), m.rho_t.resize(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const double al = spec.alpha[i], be = spec.beta[i], la = spec.lambda[i], mu = spec.mu[i];
        const double a = al - be;
        const double b = mu - la;
        m.mean_z[i] = a * (specfun::digamma(al) - std::log(la)) + b * al / la;
        m.var_z[i] = a * a * specfun::trigamma(al) + b * (al * mu + al * la - 2.0 * be * la) / (la * la);
        m.mean_zt[i] = a * (specfun::digamma(be) - std::log(mu)) + b * be / mu;
        m.var_zt[i] = a * a * specfun::trigamma(be) + b * (2.0 * al * mu - be * mu - be * la) / (mu * mu);
        m.var_z[i] = std::max(0.0, m.var_z[i]);
        m.var_zt[i] = std::max(0.0, m.var_zt[i]);
        try {
          m.rho[i] = third_abs_moment(a, b, m.mean_z[i], al, la);
          m.rho_t[i] = third_abs_moment(a, b, m.mean_zt[i], be, mu);
        } catch (const Error& e) {
          fail(e.code(), "component " + std::to_string(i) + ": " + e.what());
        }
      },
      threads);
  const double v = detail::sum(m.var_z);
  const double vt = detail::sum(m.var_zt);
  m.kappa = v > 0.0 ? detail::sum(m.rho) / std::pow(v, 1.5) : 0.0;
  m.kappa_t = vt > 0.0 ? detail::sum(m.rho_t) / std::pow(vt, 1.5) : 0.0;
  m.log_c_threshold = threshold_c(spec);
  return m;
}

struct GammaTvEstimate {
  double point = 0.0;
  double eps_bound = 0.0;
  BoundInterval interval;
  double c0_used = kDefaultC0;
  double lower_arg = 0.0;  ///< (c - sum E Z) / sd
  double upper_arg = 0.0;  ///< (c - sum E Z~) / sd~
  bool reversed = false;   ///< upper_arg < lower_arg; point set to 0
};

/// Phi(u) - Phi(l), using upper tails when both arguments lean positive.
inline double normal_interval(double l, double u) {
  if (l + u > 0.0) return specfun::normal_cdf(-l) - specfun::normal_cdf(-u);
  return specfun::normal_cdf(u) - specfun::normal_cdf(l);
}

inline GammaTvEstimate tv_estimate(const GammaProductSpec& spec, double c0 = kDefaultC0, unsigned threads = 0) {
  spec.validate();
  if (!(c0 > 0.0) || !std::isfinite(c0)) fail(Errc::domain_error, "gamma_tv: c0 must be positive");
  GammaTvEstimate out;
  out.c0_used = c0;
  out.interval.regime = "berry-esseen";
  if (spec.identical()) {
    out.interval.notes.push_back("identical laws");
    return out;
  }
  const MomentSummary m = moments(spec, threads);
  const double v = detail::sum(m.var_z);
  const double vt = detail::sum(m.var_zt);
  if (!(v > 0.0) || !(vt > 0.0)) {
    out.interval.notes.push_back("degenerate variance");
    return out;
  }
  const double c = m.log_c_threshold;
  out.lower_arg = (c - detail::sum(m.mean_z)) / std::sqrt(v);
  out.upper_arg = (c - detail::sum(m.mean_zt)) / std::sqrt(vt);
  if (out.upper_arg < out.lower_arg) {
    out.reversed = true;
    out.point = 0.0;
    out.interval.notes.push_back("normal approximation limits reversed; point set to 0");
  } else {
    out.point = std::clamp(normal_interval(out.lower_arg, out.upper_arg), 0.0, 1.0);
  }
  out.eps_bound = c0 * (m.kappa + m.kappa_t);
  out.interval.lower = out.point - out.eps_bound;
  out.interval.upper = out.point + out.eps_bound;
  divbound::detail::clip_interval(out.interval, 0.0, 1.0);
  return out;
}

/// Exact TVD for one component: the likelihood ratio crosses 1 at most twice,
/// and the masses between crossings are Gamma CDF differences.
inline double tv_exact_1d(double alpha, double beta, double lambda, double mu) {
  const GammaProductSpec spec{{alpha}, {beta}, {lambda}, {mu}};
  spec.validate();
  if (spec.identical()) return 0.0;
  const double a = alpha - beta;
  const double b = mu - lambda;
  const double c = threshold_c(spec);
  const auto roots = level_crossings(a, b, c);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cuts{-kInf};
  cuts.insert(cuts.end(), roots.begin(), roots.end());
  cuts.push_back(kInf);
  const detail::LevelFunction h{a, b, c};
  double tv = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    double probe;
    if (std::isinf(lo) && std::isinf(hi))
      probe = 0.0;
    else if (std::isinf(lo))
      probe = hi - 1.0;
    else if (std::isinf(hi))
      probe = lo + 1.0;
    else
      probe = 0.5 * (lo + hi);
    if (!(h(probe) > 0.0)) continue;
    const double xlo = std::isinf(lo) ? 0.0 : std::exp(lo);
    const double xhi = std::isinf(hi) ? kInf : std::exp(hi);
    tv += specfun::gamma_interval_probability(lambda * xlo, lambda * xhi, alpha) -
          specfun::gamma_interval_probability(mu * xlo, mu * xhi, beta);
  }
  return std::clamp(tv, 0.0, 1.0);
}

}  // namespace divbound::gamma_tv
