#pragma once

// Multivariate Student-t (identity scale) against a centered normal with
// diagonal covariance D: sublevel-set description of the comparison regions,
// TVD bounds, exact forward KL and bounds on the reverse KL.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "divbound/bounds.hpp"
#include "divbound/elliptical.hpp"
#include "divbound/error.hpp"
#include "divbound/quadrature.hpp"
#include "divbound/reduction.hpp"
#include "divbound/specfun.hpp"

namespace divbound::student_normal {

inline constexpr std::size_t kMaxDimension = 5000;

/// ln c = ln Gamma((nu+n)/2) - ln Gamma(nu/2) + (n/2) ln(2/nu) + (1/2) sum ln d_i.
inline double log_c(double nu, std::size_t n, const DiagonalScales& d) {
  const double h = 0.5 * static_cast<double>(n);
  return specfun::log_gamma(0.5 * nu + h) - specfun::log_gamma(0.5 * nu) + h * std::log(2.0 / nu) + 0.5 * d.sum_log_d();
}

/// ln of the lower envelope of c obtained by replacing every d_i with d_-.
inline double log_clow(double nu, std::size_t n, double d_minus) {
  const double h = 0.5 * static_cast<double>(n);
  return specfun::log_gamma(0.5 * nu + h) - specfun::log_gamma(0.5 * nu) + h * std::log(2.0 * d_minus / nu);
}

/// Smallest even n0 = 2k with (1/k) sum_{l<k} ln(1 + 2l/nu) >= -ln d_-.
inline std::size_t compute_n0(double nu, double d_minus, std::size_t max_k = 10'000'000) {
  if (!(nu > 0.0) || !(d_minus > 0.0)) fail(Errc::domain_error, "compute_n0: nu and d_minus must be positive");
  const double target = -std::log(d_minus);
  double sum = 0.0;
  for (std::size_t k = 1; k <= max_k; ++k) {
    sum += std::log1p(2.0 * static_cast<double>(k - 1) / nu);
    if (sum >= target * static_cast<double>(k)) return 2 * k;
  }
  fail(Errc::iteration_limit, "compute_n0: no threshold below k = " + std::to_string(max_k));
}

/// Height of the maximum of ln phi_{alpha,gamma}(x) = alpha ln(1+x) - gamma x.
inline double log_phi_max(double alpha, double gamma) {
  return gamma + alpha * std::log(alpha / gamma) - alpha;
}

class StudentNormalProblem {
 public:
  StudentNormalProblem(double nu, DiagonalScales d) : nu_(nu), d_(std::move(d)) {
    if (!(nu > 0.0) || !std::isfinite(nu)) fail(Errc::domain_error, "student-normal: nu must be positive and finite");
    if (d_.size() == 0) fail(Errc::domain_error, "student-normal: empty scale vector");
    if (d_.size() > kMaxDimension)
      fail(Errc::unsupported_dimension, "student-normal: n = " + std::to_string(d_.size()) + " exceeds the supported " +
                                            std::to_string(kMaxDimension));
    const double n = static_cast<double>(d_.size());
    alpha_ = 0.5 * (nu + n);
    gamma_minus_ = nu / (2.0 * d_.d_plus());
    gamma_plus_ = nu / (2.0 * d_.d_minus());
    log_c_ = student_normal::log_c(nu, d_.size(), d_);
  }

  double nu() const { return nu_; }
  std::size_t n() const { return d_.size(); }
  const DiagonalScales& d() const { return d_; }
  double alpha() const { return alpha_; }
  double gamma_minus() const { return gamma_minus_; }
  double gamma_plus() const { return gamma_plus_; }
  double log_c() const { return log_c_; }
  /// ln of the Student normalizing constant Gamma((nu+n)/2) / (Gamma(nu/2) (pi nu)^{n/2}).
  double log_student_norm() const {
    return specfun::log_gamma(alpha_) - specfun::log_gamma(0.5 * nu_) -
           0.5 * static_cast<double>(n()) * std::log(std::numbers::pi * nu_);
  }

 private:
  double nu_;
  DiagonalScales d_;
  double alpha_ = 0.0;
  double gamma_minus_ = 0.0;
  double gamma_plus_ = 0.0;
  double log_c_ = 0.0;
};

struct RegimeReport {
  std::size_t n0 = 2;
  bool condition_liminf = false;  ///< c below the maximum of phi_{alpha, gamma+}
  bool condition_limsup = false;  ///< c at or above it: A+ is the whole ray
  bool applicable = false;        ///< n >= n0
  double margin_plus = 0.0;       ///< max ln phi_{alpha,gamma+} - ln c
  double margin_minus = 0.0;      ///< max ln phi_{alpha,gamma-} - ln c, always > 0
};

inline RegimeReport classify_regime(const StudentNormalProblem& p) {
  RegimeReport r;
  r.n0 = compute_n0(p.nu(), p.d().d_minus());
  r.margin_plus = log_phi_max(p.alpha(), p.gamma_plus()) - p.log_c();
  r.margin_minus = log_phi_max(p.alpha(), p.gamma_minus()) - p.log_c();
  r.condition_liminf = r.margin_plus > 0.0;
  r.condition_limsup = !r.condition_liminf;
  r.applicable = p.n() >= r.n0;
  if (!(r.margin_minus > 0.0))
    fail(Errc::internal, "classify_regime: c reaches the maximum of phi for gamma-, margin " +
                             std::to_string(r.margin_minus));
  return r;
}

enum class SublevelCase { full_ray, half_ray, two_intervals };

inline const char* case_name(SublevelCase c) {
  switch (c) {
    case SublevelCase::full_ray:
      return "FULL_RAY";
    case SublevelCase::half_ray:
      return "HALF_RAY";
    case SublevelCase::two_intervals:
      return "TWO_INTERVALS";
  }
  return "?";
}

/// {x >= 0 : (1+x)^alpha e^{-gamma x} <= c} = [0, a] u [b, inf).
struct SublevelSolution {
  SublevelCase case_tag = SublevelCase::full_ray;
  std::optional<double> a;
  std::optional<double> b;
  bool tangent = false;  ///< a = b at the maximum of phi

  /// The excluded open interval (lo, hi); empty for the whole ray.
  std::pair<double, double> complement() const {
    if (case_tag == SublevelCase::full_ray) return {0.0, 0.0};
    return {a.value_or(0.0), *b};
  }
};

namespace detail {

inline double log_phi(double alpha, double gamma, double x) { return alpha * std::log1p(x) - gamma * x; }

// A few guarded Newton steps on ln phi(x) = log_c; keeps the better point.
inline double polish_root(double alpha, double gamma, double log_c, double x) {
  double res = log_phi(alpha, gamma, x) - log_c;
  for (int i = 0; i < 3; ++i) {
    const double slope = alpha / (1.0 + x) - gamma;
    if (slope == 0.0 || !std::isfinite(slope)) break;
    const double next = x - res / slope;
    if (!(next > -1.0)) break;
    const double next_res = log_phi(alpha, gamma, next) - log_c;
    if (!(std::abs(next_res) < std::abs(res))) break;
    x = next;
    res = next_res;
  }
  if (!(std::abs(res) <= 1e-9 * (1.0 + std::abs(log_c) + gamma * std::abs(x))))
    fail(Errc::internal, "sublevel_endpoints: root residual " + std::to_string(res));
  return x;
}

}  // namespace detail

inline SublevelSolution sublevel_endpoints(double alpha, double gamma, double log_c) {
  if (!(alpha > 0.0) || !(gamma > 0.0) || !std::isfinite(log_c))
    fail(Errc::domain_error, "sublevel_endpoints: alpha, gamma must be positive and ln c finite");
  SublevelSolution s;
  const bool two_possible = gamma <= alpha;
  if (log_c >= 0.0 && (!two_possible || log_c >= log_phi_max(alpha, gamma))) {
    s.case_tag = SublevelCase::full_ray;
    return s;
  }
  // z = -(gamma/alpha) c^{1/alpha} e^{-gamma/alpha}, kept as ln(-z).
  const double lz = std::log(gamma / alpha) + log_c / alpha - gamma / alpha;
  const double gap = -std::expm1(lz + 1.0);  // 1 + e z
  const double z = -std::exp(lz);
  if (gap < -1e-13) fail(Errc::internal, "sublevel_endpoints: Lambert argument below -1/e");
  const double scale = alpha / gamma;
  if (log_c < 0.0) {
    s.case_tag = SublevelCase::half_ray;
    s.b = detail::polish_root(alpha, gamma, log_c, -1.0 - scale * specfun::lambert_wm1(z));
    return s;
  }
  s.case_tag = SublevelCase::two_intervals;
  if (gap <= 1e-13) {
    s.tangent = true;
    s.a = s.b = (alpha - gamma) / gamma;
    return s;
  }
  s.a = detail::polish_root(alpha, gamma, log_c, std::max(0.0, -1.0 - scale * specfun::lambert_w0(z)));
  s.b = detail::polish_root(alpha, gamma, log_c, -1.0 - scale * specfun::lambert_wm1(z));
  return s;
}

/// The two sublevel solutions in x = t / nu units: index 0 for A-, 1 for A+.
struct RegionPair {
  SublevelSolution minus;
  SublevelSolution plus;
};

inline RegionPair comparison_regions(const StudentNormalProblem& p) {
  return {sublevel_endpoints(p.alpha(), p.gamma_minus(), p.log_c()),
          sublevel_endpoints(p.alpha(), p.gamma_plus(), p.log_c())};
}

/// P{ lo < |X|^2 / nu < hi } for the Student law; I(1/(1+x); nu/2, n/2) form.
inline double student_excluded_mass(double nu, std::size_t n, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  auto at = [&](double x) -> specfun::BetaPair {
    if (x <= 0.0) return {1.0, 0.0};
    return specfun::reg_inc_beta_pair(1.0 / (1.0 + x), 0.5 * nu, 0.5 * static_cast<double>(n), {}, x / (1.0 + x));
  };
  const auto plo = at(lo);
  const auto phi = at(hi);
  return std::max(0.0, plo.complement < plo.i ? phi.complement - plo.complement : plo.i - phi.i);
}

/// P{ lo < S < hi } for S ~ chi^2_n.
inline double chi2_excluded_mass(std::size_t n, double lo, double hi) {
  return specfun::gamma_interval_probability(0.5 * lo, 0.5 * hi, 0.5 * static_cast<double>(n));
}

/// TVD bounds for n >= n0.  Both bounds use the excluded intervals of A+ and
/// A-, which covers the limsup regime (A+ whole ray) without a separate path.
inline BoundInterval tv_bounds_student_normal(const StudentNormalProblem& p) {
  const RegimeReport regime = classify_regime(p);
  if (!regime.applicable)
    fail(Errc::precondition_n_too_small,
         "n = " + std::to_string(p.n()) + " is below the threshold n0 = " + std::to_string(regime.n0));
  const RegionPair reg = comparison_regions(p);
  const double nu = p.nu();
  const auto [am, bm] = reg.minus.complement();
  const auto [ap, bp] = reg.plus.complement();

  BoundInterval out;
  out.regime = regime.condition_liminf ? "liminf" : "limsup";
  // upper = P(d+ S in A-^c) - P(|X|^2 in A+^c); lower swaps the roles.
  const double chi_upper = chi2_excluded_mass(p.n(), nu * am / p.d().d_plus(), nu * bm / p.d().d_plus());
  const double stu_upper = student_excluded_mass(nu, p.n(), ap, bp);
  const double chi_lower = chi2_excluded_mass(p.n(), nu * ap / p.d().d_minus(), nu * bp / p.d().d_minus());
  const double stu_lower = student_excluded_mass(nu, p.n(), am, bm);
  out.upper = chi_upper - stu_upper;
  out.lower = chi_lower - stu_lower;
  out.notes.push_back(std::string("A- ") + case_name(reg.minus.case_tag) + ", A+ " + case_name(reg.plus.case_tag));
  out.notes.push_back("beta argument 1/(1+x) at the sublevel endpoints");
  if (reg.minus.tangent || reg.plus.tangent) out.notes.push_back("tangent sublevel endpoints");
  divbound::detail::check_ordered(out, 1e-12, "tv_bounds_student_normal");
  divbound::detail::clip_interval(out, 0.0, 1.0);
  return out;
}

/// Which Beta-argument form reproduces the Student mass between the A-
/// endpoints, measured against direct radial quadrature.
struct BetaVariantCheck {
  double quadrature = 0.0;
  double endpoint = 0.0;         ///< I(1/(1+x))
  double scaled = 0.0;           ///< I(1/(1+nu x))
  double scaled_squared = 0.0;   ///< I(1/(1+nu x^2))
  std::string best;
};

inline BetaVariantCheck beta_variant_check(const StudentNormalProblem& p) {
  const auto s = sublevel_endpoints(p.alpha(), p.gamma_minus(), p.log_c());
  if (s.case_tag != SublevelCase::two_intervals || s.tangent)
    fail(Errc::precondition_n_too_small, "beta_variant_check: A- is not a two-interval set at this n");
  const double nu = p.nu();
  const double a = *s.a, b = *s.b;
  BetaVariantCheck c;
  const auto g = elliptical::DensityGenerator::student(nu, p.n());
  c.quadrature = elliptical::radial_mass(g, nu * a, nu * b, elliptical::MassMethod::quadrature);
  auto beta_diff = [&](double lo, double hi) {
    const double an = 0.5 * nu, bn = 0.5 * static_cast<double>(p.n());
    return specfun::reg_inc_beta(1.0 / (1.0 + lo), an, bn) - specfun::reg_inc_beta(1.0 / (1.0 + hi), an, bn);
  };
  c.endpoint = beta_diff(a, b);
  c.scaled = beta_diff(nu * a, nu * b);
  c.scaled_squared = beta_diff(nu * a * a, nu * b * b);
  const double e0 = std::abs(c.endpoint - c.quadrature);
  const double e1 = std::abs(c.scaled - c.quadrature);
  const double e2 = std::abs(c.scaled_squared - c.quadrature);
  c.best = (e0 <= e1 && e0 <= e2) ? "1/(1+x)" : (e1 <= e2 ? "1/(1+nu x)" : "1/(1+nu x^2)");
  return c;
}

/// KL(t_nu || N(0, D)); +inf for nu <= 2.
inline double kl_exact_t_vs_normal(const StudentNormalProblem& p) {
  const double nu = p.nu();
  if (nu <= 2.0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(p.n());
  const double h = 0.5 * (nu + n);
  return 0.5 * p.d().sum_log_d() + 0.5 * n * specfun::kLn2Pi + nu / (nu - 2.0) * 0.5 * p.d().sum_inv_d() -
         h * (specfun::digamma(h) - specfun::digamma(0.5 * nu)) + p.log_student_norm();
}

// ---------------------------------------------------------------------------
// Delta_n = int_0^inf e^{-y} ln(1 + y/x) y^{n/2-1} dy with x = nu / (2 d).

struct DeltaResult {
  double normalized = 0.0;  ///< Delta_n / Gamma(n/2) = E ln(1 + Y/x), Y ~ Gamma(n/2)
  double log_value = 0.0;   ///< ln Delta_n
  std::string provenance;   ///< "recursion" or "recursion, quadrature base"

  double value() const { return std::exp(log_value); }
};

namespace detail {

inline quad::QuadOptions delta_quad_options() {
  quad::QuadOptions opt;
  opt.rel_tol = 1e-13;
  opt.max_intervals = 4000;
  return opt;
}

// E_{Gamma(s)} f(Y) by log-space quadrature in u = ln y.
template <class F>
double gamma_expectation(double s, F&& f) {
  const double lg = specfun::log_gamma(s);
  auto log_dens = [&](double u) { return s * u - std::exp(u) - lg; };
  const auto r = quad::integrate_log_space(log_dens, [&](double u) { return f(std::exp(u)); },
                                           -std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity(), -700.0, 12.0, delta_quad_options());
  if (!r.converged) fail(Errc::quadrature_failure, "delta: Gamma expectation did not converge");
  return r.value();
}

// E_{Gamma(s)} 1/(x + Y).
inline double inverse_shift_moment(double s, double x) {
  return gamma_expectation(s, [x](double y) { return 1.0 / (x + y); });
}

}  // namespace detail

/// Delta_2 / Gamma(1) = e^x E1(x).
inline double delta_base_2(double x) { return specfun::expint_e1_scaled(x); }

/// Delta_1 / Gamma(1/2) = pi erfi(sqrt x) - ln(4x) - gamma_EM - 2x 2F2(1,1;3/2,2;x).
/// The two large terms cancel as x grows; `rel_error` receives the rounding
/// estimate, and overflow is reported by an infinite estimate.
inline double delta_base_1(double x, double* rel_error = nullptr) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  double big1 = 0.0, big2 = 0.0;
  try {
    big1 = std::numbers::pi * specfun::erfi(std::sqrt(x));
    big2 = 2.0 * x * specfun::hyp2f2_11_32_2(x);
  } catch (const Error& e) {
    if (e.code() != Errc::overflow) throw;
    if (rel_error) *rel_error = std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double small = std::log(4.0 * x) + specfun::SpecialConstants::euler_mascheroni;
  const double v = big1 - small - big2;
  if (rel_error) *rel_error = 4.0 * kEps * (big1 + big2 + std::abs(small)) / std::abs(v);
  return v;
}

inline DeltaResult delta(double nu, double d_scale, std::size_t n) {
  if (!(nu > 0.0) || !(d_scale > 0.0)) fail(Errc::domain_error, "delta: nu and scale must be positive");
  if (n < 1) fail(Errc::domain_error, "delta: n must be >= 1");
  if (n > kMaxDimension) fail(Errc::unsupported_dimension, "delta: n exceeds the supported dimension");
  const double x = nu / (2.0 * d_scale);
  DeltaResult out;
  out.provenance = "recursion";
  double r;
  double s;
  if (n % 2 == 0) {
    r = delta_base_2(x);
    s = 2.0;
  } else {
    double err = 0.0;
    r = delta_base_1(x, &err);
    if (!(err <= 1e-10)) {
      r = detail::gamma_expectation(0.5, [x](double y) { return std::log1p(y / x); });
      out.provenance = "recursion, quadrature base";
    }
    s = 1.5;
  }
  const double top = 0.5 * static_cast<double>(n);
  // beta_{s+1} = (1 - x beta_s) / s damps errors once s exceeds x.
  double beta = 0.0;
  bool have_beta = false;
  for (; s <= top + 0.25; s += 1.0) {
    if (have_beta && s - 1.0 > x + 1.0)
      beta = (1.0 - x * beta) / (s - 1.0);
    else
      beta = detail::inverse_shift_moment(s, x);
    have_beta = true;
    r += beta;
  }
  out.normalized = r;
  out.log_value = std::log(r) + specfun::log_gamma(top);
  return out;
}

/// Bounds on KL(N(0, D) || t_nu).
inline BoundInterval kl_reverse_bounds(const StudentNormalProblem& p) {
  const double n = static_cast<double>(p.n());
  const double rest = -p.log_student_norm() - 0.5 * n - 0.5 * n * specfun::kLn2Pi - 0.5 * p.d().sum_log_d();
  const DeltaResult lo = delta(p.nu(), p.d().d_minus(), p.n());
  const DeltaResult hi = p.d().all_equal() ? lo : delta(p.nu(), p.d().d_plus(), p.n());
  BoundInterval out;
  out.regime = "reverse";
  out.lower = 0.5 * (p.nu() + n) * lo.normalized + rest;
  out.upper = 0.5 * (p.nu() + n) * hi.normalized + rest;
  if (lo.provenance != "recursion") out.notes.push_back("lower: " + lo.provenance);
  if (hi.provenance != "recursion") out.notes.push_back("upper: " + hi.provenance);
  if (out.lower < 0.0) {
    out.lower = 0.0;
    out.lower_clipped = true;
  }
  divbound::detail::check_ordered(out, 1e-12 * (1.0 + std::abs(out.upper)), "kl_reverse_bounds");
  return out;
}

}  // namespace divbound::student_normal
