#pragma once

// Divergences between centered elliptical laws E(g1, I) and E(g2, D) through
// one-dimensional radial integrals in t = |x|^2.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "divbound/bounds.hpp"
#include "divbound/error.hpp"
#include "divbound/quadrature.hpp"
#include "divbound/reduction.hpp"
#include "divbound/specfun.hpp"

namespace divbound::elliptical {

enum class GeneratorKind { custom, student, normal };

/// ln g(t) for t >= 0, the radial profile of a density on R^n.
class DensityGenerator {
 public:
  using LogFn = std::function<double(double)>;

  DensityGenerator(std::size_t n, LogFn log_g, bool monotone_decreasing, std::string name = "custom")
      : n_(n), log_g_(std::move(log_g)), monotone_(monotone_decreasing), name_(std::move(name)) {
    if (n_ < 1) fail(Errc::domain_error, "generator: dimension must be >= 1");
    if (!log_g_) fail(Errc::domain_error, "generator: empty log-density callable");
  }

  /// Multivariate Student-t with nu degrees of freedom and identity scale.
  static DensityGenerator student(double nu, std::size_t n) {
    if (!(nu > 0.0) || !std::isfinite(nu)) fail(Errc::domain_error, "student generator: nu must be positive");
    if (n < 1) fail(Errc::domain_error, "generator: dimension must be >= 1");
    const double dn = static_cast<double>(n);
    const double log_k = specfun::log_gamma(0.5 * (nu + dn)) - specfun::log_gamma(0.5 * nu) -
                         0.5 * dn * std::log(std::numbers::pi * nu);
    const double power = 0.5 * (nu + dn);
    DensityGenerator g(
        n, [=](double t) { return log_k - power * std::log1p(t / nu); }, true, "student:" + format_number(nu));
    g.kind_ = GeneratorKind::student;
    g.nu_ = nu;
    return g;
  }

  /// Standard normal.
  static DensityGenerator normal(std::size_t n) {
    if (n < 1) fail(Errc::domain_error, "generator: dimension must be >= 1");
    const double log_k = -0.5 * static_cast<double>(n) * specfun::kLn2Pi;
    DensityGenerator g(n, [=](double t) { return log_k - 0.5 * t; }, true, "normal");
    g.kind_ = GeneratorKind::normal;
    return g;
  }

  /// "normal" or "student:<nu>".
  static DensityGenerator parse(std::string_view spec, std::size_t n) {
    if (spec == "normal" || spec == "gaussian") return normal(n);
    constexpr std::string_view prefix = "student:";
    if (spec.substr(0, prefix.size()) == prefix) {
      const std::string rest(spec.substr(prefix.size()));
      std::size_t used = 0;
      double nu = 0.0;
      try {
        nu = std::stod(rest, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != rest.size()) fail(Errc::domain_error, "generator: bad degrees of freedom in '" + std::string(spec) + "'");
      return student(nu, n);
    }
    fail(Errc::domain_error, "generator: unknown preset '" + std::string(spec) + "' (use normal or student:<nu>)");
  }

  double log_g(double t) const { return log_g_(t); }
  double operator()(double t) const { return log_g_(t); }
  std::size_t dim() const { return n_; }
  bool monotone_decreasing() const { return monotone_; }
  GeneratorKind kind() const { return kind_; }
  double nu() const { return nu_; }
  const std::string& name() const { return name_; }

  /// ln(pi^{n/2} / Gamma(n/2)): mass of {t in dt} is exp(this + ln g(t)) t^{n/2-1} dt.
  double log_radial_weight() const {
    const double h = 0.5 * static_cast<double>(n_);
    return h * std::log(std::numbers::pi) - specfun::log_gamma(h);
  }

 private:
  static std::string format_number(double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  std::size_t n_;
  LogFn log_g_;
  bool monotone_;
  std::string name_;
  GeneratorKind kind_ = GeneratorKind::custom;
  double nu_ = 0.0;
};

/// A subset of [0, inf) given by sorted breakpoints; membership alternates
/// between consecutive breakpoints, starting with `kept_first` on [0, b0).
struct RadialRegion {
  std::vector<double> breakpoints;
  bool kept_first = true;

  static RadialRegion whole_ray() { return {}; }
  static RadialRegion empty() { return {{}, false}; }

  bool contains(double t) const {
    bool kept = kept_first;
    for (double b : breakpoints) {
      if (t < b) break;
      kept = !kept;
    }
    return kept;
  }

  /// Kept pieces as (lo, hi) pairs; hi may be +inf.
  std::vector<std::pair<double, double>> kept_intervals() const {
    std::vector<std::pair<double, double>> out;
    double lo = 0.0;
    bool kept = kept_first;
    for (double b : breakpoints) {
      if (kept && b > lo) out.emplace_back(lo, b);
      lo = b;
      kept = !kept;
    }
    if (kept) out.emplace_back(lo, std::numeric_limits<double>::infinity());
    return out;
  }

  RadialRegion complement() const { return {breakpoints, !kept_first}; }

  RadialRegion scaled(double c) const {
    RadialRegion r = *this;
    for (auto& b : r.breakpoints) b *= c;
    return r;
  }

  bool is_whole_ray() const { return breakpoints.empty() && kept_first; }
  bool is_empty() const { return breakpoints.empty() && !kept_first; }
};

struct ScanOptions {
  double t_min = 1e-8;
  double t_max = 1e8;
  int probes = 512;
  int max_sign_changes = 64;
};

/// Region {t : h(t) >= 0} from sign changes of h on a log-spaced probe grid,
/// each refined by a bracketed solve in ln t.
template <class H>
RadialRegion region_from_sign(H&& h, const ScanOptions& scan = {}) {
  const double l0 = std::log(scan.t_min);
  const double l1 = std::log(scan.t_max);
  auto sign_at = [&](double u) {
    const double v = h(std::exp(u));
    if (std::isnan(v)) fail(Errc::pathological_input, "region scan: NaN in generator comparison");
    return v;
  };
  RadialRegion region;
  double u_prev = l0;
  double v_prev = sign_at(l0);
  region.kept_first = v_prev >= 0.0;
  for (int k = 1; k < scan.probes; ++k) {
    const double u = l0 + (l1 - l0) * k / (scan.probes - 1);
    const double v = sign_at(u);
    if ((v >= 0.0) != (v_prev >= 0.0)) {
      if (static_cast<int>(region.breakpoints.size()) >= scan.max_sign_changes)
        fail(Errc::pathological_input, "region scan: more than " + std::to_string(scan.max_sign_changes) +
                                           " sign changes; generator comparison is pathological");
      double root = 0.5 * (u_prev + u);
      if (std::isfinite(v) && std::isfinite(v_prev)) {
        std::uintmax_t iters = 200;
        const auto bracket = boost::math::tools::toms748_solve(
            sign_at, u_prev, u, v_prev, v, boost::math::tools::eps_tolerance<double>(52), iters);
        root = 0.5 * (bracket.first + bracket.second);
      } else {
        double a = u_prev, b = u;
        const bool a_kept = v_prev >= 0.0;
        for (int i = 0; i < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++i) {
          const double m = 0.5 * (a + b);
          ((sign_at(m) >= 0.0) == a_kept ? a : b) = m;
        }
        root = 0.5 * (a + b);
      }
      region.breakpoints.push_back(std::exp(root));
    }
    u_prev = u;
    v_prev = v;
  }
  return region;
}

/// A = {t : g1(t) >= g2(t)}.
inline RadialRegion region_A(const DensityGenerator& g1, const DensityGenerator& g2, const ScanOptions& scan = {}) {
  return region_from_sign([&](double t) { return g1.log_g(t) - g2.log_g(t); }, scan);
}

/// A+ (plus = true) or A- : {t : prod d^{1/2} g1(t) >= g2(t / d_-+)}.
inline RadialRegion region_A_pm(const DensityGenerator& g1, const DensityGenerator& g2, const DiagonalScales& d,
                                bool plus, const ScanOptions& scan = {}) {
  const double shift = 0.5 * d.sum_log_d();
  const double scale = plus ? d.d_minus() : d.d_plus();
  return region_from_sign([&](double t) { return shift + g1.log_g(t) - g2.log_g(t / scale); }, scan);
}

enum class MassMethod { automatic, quadrature };

namespace detail {

inline quad::QuadOptions radial_quad_options() {
  quad::QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.max_intervals = 4000;
  return opt;
}

inline double student_mass(double nu, double n, double lo, double hi) {
  // 1/(1 + t/nu) ~ Beta(nu/2, n/2) when t = |X|^2.
  auto at = [&](double t) -> specfun::BetaPair {
    if (t <= 0.0) return {1.0, 0.0};
    if (std::isinf(t)) return {0.0, 1.0};
    return specfun::reg_inc_beta_pair(1.0 / (1.0 + t / nu), 0.5 * nu, 0.5 * n, {}, t / (nu + t));
  };
  const auto plo = at(lo);
  const auto phi = at(hi);
  // CDF in t is the complement; pick the representation with the small values.
  const double direct = phi.complement - plo.complement;
  const double via_i = plo.i - phi.i;
  return std::max(0.0, plo.complement < plo.i ? direct : via_i);
}

}  // namespace detail

/// P{ lo < |X|^2 < hi } for X ~ E(g, I).
inline double radial_mass(const DensityGenerator& g, double lo, double hi,
                          MassMethod method = MassMethod::automatic) {
  lo = std::max(lo, 0.0);
  if (!(hi > lo)) return 0.0;
  const double n = static_cast<double>(g.dim());
  if (method == MassMethod::automatic) {
    if (g.kind() == GeneratorKind::normal) return specfun::gamma_interval_probability(0.5 * lo, 0.5 * hi, 0.5 * n);
    if (g.kind() == GeneratorKind::student) return detail::student_mass(g.nu(), n, lo, hi);
  }
  const double lw = g.log_radial_weight();
  auto log_f = [&](double u) { return lw + g.log_g(std::exp(u)) + 0.5 * n * u; };
  const double u_lo = lo > 0.0 ? std::log(lo) : -std::numeric_limits<double>::infinity();
  const double u_hi = std::isinf(hi) ? std::numeric_limits<double>::infinity() : std::log(hi);
  const auto r = quad::integrate_log_space(log_f, u_lo, u_hi, -690.0, 690.0, detail::radial_quad_options());
  if (!r.converged)
    fail(Errc::quadrature_failure, "radial_mass: no convergence, error estimate " + std::to_string(r.abs_error));
  if (r.truncated_right)
    fail(Errc::quadrature_failure, "radial_mass: generator tail not resolved below t = e^690");
  return r.value();
}

/// P{ c S in region } where S = |X|^2, X ~ E(g, I).
inline double region_mass(const DensityGenerator& g, const RadialRegion& region, double c = 1.0,
                          MassMethod method = MassMethod::automatic) {
  double sum = 0.0;
  for (const auto& [lo, hi] : region.kept_intervals()) sum += radial_mass(g, lo / c, hi / c, method);
  return sum;
}

/// Total mass and (when flagged) monotonicity of a generator.  Returns the mass.
inline double validate(const DensityGenerator& g, double mass_tol = 1e-6, const ScanOptions& scan = {}) {
  const double mass = radial_mass(g, 0.0, std::numeric_limits<double>::infinity(), MassMethod::quadrature);
  if (!(std::abs(mass - 1.0) <= mass_tol))
    fail(Errc::domain_error, "generator '" + g.name() + "' does not integrate to 1 in dimension " +
                                 std::to_string(g.dim()) + " (mass " + std::to_string(mass) + ")");
  if (g.monotone_decreasing()) {
    const double l0 = std::log(scan.t_min), l1 = std::log(scan.t_max);
    double prev = g.log_g(0.0);
    for (int k = 0; k < scan.probes; ++k) {
      const double v = g.log_g(std::exp(l0 + (l1 - l0) * k / (scan.probes - 1)));
      if (v > prev + 1e-12 * (1.0 + std::abs(prev)))
        fail(Errc::domain_error, "generator '" + g.name() + "' is flagged decreasing but increases");
      prev = v;
    }
  }
  return mass;
}

namespace detail {

inline void check_same_dim(const DensityGenerator& g1, const DensityGenerator& g2) {
  if (g1.dim() != g2.dim()) fail(Errc::domain_error, "generators are declared for different dimensions");
}

// P(first in A) - P(c S2 in B), evaluated via complements when that keeps the
// terms small.
inline double mass_difference(const DensityGenerator& g1, const RadialRegion& a, const DensityGenerator& g2,
                              const RadialRegion& b, double c, MassMethod method) {
  const double p1 = region_mass(g1, a, 1.0, method);
  const double p2 = region_mass(g2, b, c, method);
  if (p1 <= 0.5 && p2 <= 0.5) return p1 - p2;
  const double q1 = region_mass(g1, a.complement(), 1.0, method);
  const double q2 = region_mass(g2, b.complement(), c, method);
  return std::max(p1, p2) <= std::max(q1, q2) ? p1 - p2 : q2 - q1;
}

}  // namespace detail

/// TVD(E(g1, I), E(g2, I)) as the radial integral of g1 - g2 over A.
inline double tv_exact_equal_scales(const DensityGenerator& g1, const DensityGenerator& g2,
                                    const ScanOptions& scan = {}) {
  detail::check_same_dim(g1, g2);
  const RadialRegion a = region_A(g1, g2, scan);
  double tv = 0.0;
  for (const auto& [lo, hi] : a.kept_intervals())
    tv += radial_mass(g1, lo, hi, MassMethod::quadrature) - radial_mass(g2, lo, hi, MassMethod::quadrature);
  return std::clamp(tv, 0.0, 1.0);
}

/// Bounds on TVD(E(g1, I), E(g2, D)) for decreasing generators.
inline BoundInterval tv_bounds(const DensityGenerator& g1, const DensityGenerator& g2, const DiagonalScales& d,
                               const ScanOptions& scan = {}, MassMethod method = MassMethod::automatic) {
  detail::check_same_dim(g1, g2);
  if (d.size() != g1.dim()) fail(Errc::domain_error, "tv_bounds: scale vector length differs from dimension");
  if (!g1.monotone_decreasing() || !g2.monotone_decreasing())
    fail(Errc::domain_error, "tv_bounds: both generators must be decreasing");
  const RadialRegion a_plus = region_A_pm(g1, g2, d, true, scan);
  const RadialRegion a_minus = region_A_pm(g1, g2, d, false, scan);
  BoundInterval out;
  out.regime = "generic";
  out.lower = detail::mass_difference(g1, a_minus, g2, a_plus, d.d_minus(), method);
  out.upper = detail::mass_difference(g1, a_plus, g2, a_minus, d.d_plus(), method);
  out.notes.push_back("A+ breakpoints: " + std::to_string(a_plus.breakpoints.size()) +
                      ", A- breakpoints: " + std::to_string(a_minus.breakpoints.size()));
  divbound::detail::check_ordered(out, 1e-10, "tv_bounds");
  divbound::detail::clip_interval(out, 0.0, 1.0);
  return out;
}

/// A possibly infinite KL value with the reason it is infinite.
struct KlValue {
  double value = 0.0;
  std::string diagnostic;

  bool is_infinite() const { return std::isinf(value); }
};

/// (pi^{n/2}/Gamma(n/2)) int g1(t) w(t) t^{n/2-1} dt with a tail-growth test.
template <class W>
KlValue radial_expectation(const DensityGenerator& g1, W&& w) {
  const double n = static_cast<double>(g1.dim());
  const double lw = g1.log_radial_weight();
  constexpr double kCap = 690.0;
  auto weight_at = [&](double u) { return w(std::exp(u)); };
  auto log_env = [&](double u) {
    const double lf = lw + g1.log_g(std::exp(u)) + 0.5 * n * u;
    const double wv = weight_at(u);
    if (std::isnan(wv)) return std::numeric_limits<double>::quiet_NaN();
    return lf + std::log1p(std::abs(wv));
  };
  auto bounded = [&](double u) {
    const double wv = weight_at(u);
    return std::isinf(wv) ? std::copysign(1.0, wv) : wv / (1.0 + std::abs(wv));
  };
  const auto r = quad::integrate_log_space(log_env, bounded, -std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity(), -kCap, kCap,
                                           detail::radial_quad_options());
  if (!r.converged)
    fail(Errc::quadrature_failure, "radial integral: no convergence, error estimate " + std::to_string(r.abs_error));
  KlValue out{r.value(), {}};
  if (r.truncated_right) {
    const double slope = (log_env(kCap) - log_env(kCap - 10.0)) / 10.0;
    if (slope >= 0.0 || std::isnan(slope)) {
      return {std::numeric_limits<double>::infinity(), "integrand does not decay in the tail: divergent"};
    }
    const double tail = std::exp(log_env(kCap)) / -slope;
    if (tail > 1e-10 * std::max(std::abs(out.value), 1e-300))
      fail(Errc::quadrature_failure, "radial integral: tail decays too slowly to resolve below t = e^690");
  }
  return out;
}

/// KL(E(g1, I) || E(g2, I)).
inline KlValue kl_exact_equal_scales(const DensityGenerator& g1, const DensityGenerator& g2) {
  detail::check_same_dim(g1, g2);
  return radial_expectation(g1, [&](double t) { return g1.log_g(t) - g2.log_g(t); });
}

/// Bounds on KL(E(g1, I) || E(g2, D)) for decreasing g2.  No clipping at 0.
inline BoundInterval kl_bounds(const DensityGenerator& g1, const DensityGenerator& g2, const DiagonalScales& d) {
  detail::check_same_dim(g1, g2);
  if (d.size() != g1.dim()) fail(Errc::domain_error, "kl_bounds: scale vector length differs from dimension");
  if (!g2.monotone_decreasing()) fail(Errc::domain_error, "kl_bounds: second generator must be decreasing");
  const double shift = 0.5 * d.sum_log_d();
  auto side = [&](double scale) {
    return radial_expectation(g1, [&](double t) { return g1.log_g(t) - g2.log_g(t / scale); });
  };
  BoundInterval out;
  out.regime = "generic";
  const KlValue lo = side(d.d_plus());
  const KlValue hi = d.all_equal() ? lo : side(d.d_minus());
  out.lower = lo.value + shift;
  out.upper = hi.value + shift;
  if (!lo.diagnostic.empty()) out.notes.push_back("lower: " + lo.diagnostic);
  if (!hi.diagnostic.empty()) out.notes.push_back("upper: " + hi.diagnostic);
  if (!(out.lower <= out.upper + 1e-10 * (1.0 + std::abs(out.upper))))
    fail(Errc::internal, "kl_bounds: lower bound exceeds upper bound");
  return out;
}

}  // namespace divbound::elliptical
