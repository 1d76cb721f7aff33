#pragma once

// Monte Carlo ground truth for divergences between laws that can be sampled
// and whose log-densities can be evaluated.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "divbound/error.hpp"
#include "divbound/parallel.hpp"
#include "divbound/specfun.hpp"

namespace divbound::oracle {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for substream `stream` of `seed`.
inline Engine substream(std::uint64_t seed, std::uint64_t stream) {
  return Engine(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

struct McConfig {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  std::uint64_t chunk = 1 << 15;  ///< samples per substream; fixes the result for a seed
  unsigned threads = 0;           ///< 0: DIVBOUND_THREADS or hardware concurrency
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples_used = 0;
};

namespace detail {

inline void validate(const McConfig& cfg) {
  if (cfg.samples < 1) fail(Errc::domain_error, "monte carlo: samples must be >= 1");
  if (cfg.chunk < 1) fail(Errc::domain_error, "monte carlo: chunk must be >= 1");
}

[[noreturn]] inline void non_finite(const char* what, std::span<const double> x) {
  std::string msg = std::string("monte carlo: non-finite log-density (") + what + ") at x = [";
  for (std::size_t i = 0; i < x.size() && i < 8; ++i) msg += (i ? ", " : "") + std::to_string(x[i]);
  if (x.size() > 8) msg += ", ...";
  fail(Errc::pathological_input, msg + "]");
}

// Runs body(engine, begin, count, slot) for each chunk and returns the slots in
// chunk order so merges are independent of the worker count.
template <class Slot, class Body>
std::vector<Slot> run_chunks(const McConfig& cfg, Body&& body) {
  validate(cfg);
  const std::uint64_t chunks = (cfg.samples + cfg.chunk - 1) / cfg.chunk;
  std::vector<Slot> slots(chunks);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        Engine eng = substream(cfg.seed, c);
        const std::uint64_t begin = c * cfg.chunk;
        const std::uint64_t count = std::min(cfg.chunk, cfg.samples - begin);
        body(eng, count, slots[c]);
      },
      cfg.threads);
  return slots;
}

}  // namespace detail

/// TVD(f1, f2) = P{f1(X) >= f2(X)} - P{f1(Y) >= f2(Y)} with X ~ f1, Y ~ f2.
/// Samplers are called as s(engine, span<double>) and fill the span;
/// log-densities are called as l(span<const double>).
template <class S1, class S2, class L1, class L2>
McResult mc_tv(std::size_t dim, S1&& sample1, S2&& sample2, L1&& log_pdf1, L2&& log_pdf2, const McConfig& cfg) {
  struct Counts {
    std::uint64_t x = 0, y = 0;
  };
  const auto slots = detail::run_chunks<Counts>(cfg, [&](Engine& eng, std::uint64_t count, Counts& out) {
    std::vector<double> buf(dim);
    const std::span<double> pt(buf);
    for (std::uint64_t i = 0; i < count; ++i) {
      sample1(eng, pt);
      const double a = log_pdf1(std::span<const double>(pt));
      const double b = log_pdf2(std::span<const double>(pt));
      if (std::isnan(a) || std::isnan(b) || a == INFINITY || b == INFINITY) detail::non_finite("first law", pt);
      out.x += a >= b;
      sample2(eng, pt);
      const double c = log_pdf1(std::span<const double>(pt));
      const double e = log_pdf2(std::span<const double>(pt));
      if (std::isnan(c) || std::isnan(e) || c == INFINITY || e == INFINITY) detail::non_finite("second law", pt);
      out.y += c >= e;
    }
  });
  Counts total;
  for (const auto& s : slots) {
    total.x += s.x;
    total.y += s.y;
  }
  const double n = static_cast<double>(cfg.samples);
  const double p1 = total.x / n;
  const double p2 = total.y / n;
  return {p1 - p2, std::sqrt(p1 * (1 - p1) / n + p2 * (1 - p2) / n), cfg.samples};
}

/// KL(f1 || f2) as the sample mean of log f1 - log f2 under f1.
template <class S1, class L1, class L2>
McResult mc_kl(std::size_t dim, S1&& sample1, L1&& log_pdf1, L2&& log_pdf2, const McConfig& cfg) {
  struct Moments {
    double sum = 0.0, sum_sq = 0.0;
  };
  const auto slots = detail::run_chunks<Moments>(cfg, [&](Engine& eng, std::uint64_t count, Moments& out) {
    std::vector<double> buf(dim);
    const std::span<double> pt(buf);
    for (std::uint64_t i = 0; i < count; ++i) {
      sample1(eng, pt);
      const double r = log_pdf1(std::span<const double>(pt)) - log_pdf2(std::span<const double>(pt));
      if (!std::isfinite(r)) detail::non_finite("log ratio", pt);
      out.sum += r;
      out.sum_sq += r * r;
    }
  });
  Moments total;
  for (const auto& s : slots) {
    total.sum += s.sum;
    total.sum_sq += s.sum_sq;
  }
  const double n = static_cast<double>(cfg.samples);
  const double mean = total.sum / n;
  const double var = cfg.samples > 1 ? std::max(0.0, (total.sum_sq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean, std::sqrt(var / n), cfg.samples};
}

// ---------------------------------------------------------------------------
// Laws

/// Centered multivariate Student-t with identity scale.
class StudentLaw {
 public:
  StudentLaw(double nu, std::size_t n) : nu_(nu), n_(n) {
    if (!(nu > 0.0) || !std::isfinite(nu)) fail(Errc::domain_error, "student: nu must be positive");
    if (n < 1) fail(Errc::domain_error, "student: dimension must be >= 1");
    const double dn = static_cast<double>(n);
    log_norm_ = specfun::log_gamma(0.5 * (nu + dn)) - specfun::log_gamma(0.5 * nu) -
                0.5 * dn * std::log(std::numbers::pi * nu);
  }

  std::size_t dim() const { return n_; }
  double nu() const { return nu_; }

  void sample(Engine& eng, std::span<double> out) const {
    std::normal_distribution<double> normal;
    std::gamma_distribution<double> chi_half(0.5 * nu_, 1.0);
    for (auto& v : out) v = normal(eng);
    const double scale = std::sqrt(nu_ / (2.0 * chi_half(eng)));
    for (auto& v : out) v *= scale;
  }

  double log_pdf(std::span<const double> x) const {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return log_norm_ - 0.5 * (nu_ + static_cast<double>(n_)) * std::log1p(r2 / nu_);
  }

 private:
  double nu_;
  std::size_t n_;
  double log_norm_ = 0.0;
};

/// Centered normal with diagonal covariance diag(d).
class DiagNormalLaw {
 public:
  explicit DiagNormalLaw(std::vector<double> d) : d_(std::move(d)) {
    if (d_.empty()) fail(Errc::domain_error, "normal: dimension must be >= 1");
    double sum_log = 0.0;
    for (double v : d_) {
      if (!(v > 0.0) || !std::isfinite(v)) fail(Errc::domain_error, "normal: variances must be positive");
      sum_log += std::log(v);
      sd_.push_back(std::sqrt(v));
    }
    log_norm_ = -0.5 * static_cast<double>(d_.size()) * specfun::kLn2Pi - 0.5 * sum_log;
  }

  std::size_t dim() const { return d_.size(); }
  const std::vector<double>& variances() const { return d_; }

  void sample(Engine& eng, std::span<double> out) const {
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sd_[i] * normal(eng);
  }

  double log_pdf(std::span<const double> x) const {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) q += x[i] * x[i] / d_[i];
    return log_norm_ - 0.5 * q;
  }

 private:
  std::vector<double> d_;
  std::vector<double> sd_;
  double log_norm_ = 0.0;
};

/// Independent Gamma(shape_i, rate_i) components.
class GammaProductLaw {
 public:
  GammaProductLaw(std::vector<double> shape, std::vector<double> rate) : shape_(std::move(shape)), rate_(std::move(rate)) {
    if (shape_.empty() || shape_.size() != rate_.size())
      fail(Errc::domain_error, "gamma product: shape and rate must be nonempty and of equal length");
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (!(shape_[i] > 0.0) || !(rate_[i] > 0.0)) fail(Errc::domain_error, "gamma product: parameters must be positive");
      log_norm_ += shape_[i] * std::log(rate_[i]) - specfun::log_gamma(shape_[i]);
    }
  }

  std::size_t dim() const { return shape_.size(); }

  void sample(Engine& eng, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::gamma_distribution<double> g(shape_[i], 1.0 / rate_[i]);
      out[i] = g(eng);
    }
  }

  double log_pdf(std::span<const double> x) const {
    double s = log_norm_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0)) return -INFINITY;
      s += (shape_[i] - 1.0) * std::log(x[i]) - rate_[i] * x[i];
    }
    return s;
  }

 private:
  std::vector<double> shape_;
  std::vector<double> rate_;
  double log_norm_ = 0.0;
};

/// The image of a base law under x -> L x, with L the Cholesky factor of a
/// covariance.  Turns the identity-scale laws above into full-covariance ones.
template <class Base>
class LinearImageLaw {
 public:
  LinearImageLaw(Base base, const Eigen::MatrixXd& cov) : base_(std::move(base)), chol_(cov) {
    if (static_cast<std::size_t>(cov.rows()) != base_.dim() || cov.rows() != cov.cols())
      fail(Errc::domain_error, "linear image: covariance shape does not match the base law");
    if (chol_.info() != Eigen::Success) fail(Errc::not_positive_definite, "linear image: covariance is not SPD");
    const Eigen::MatrixXd l = chol_.matrixL();
    log_det_half_ = l.diagonal().array().log().sum();
  }

  std::size_t dim() const { return base_.dim(); }

  void sample(Engine& eng, std::span<double> out) const {
    base_.sample(eng, out);
    Eigen::Map<Eigen::VectorXd> v(out.data(), static_cast<Eigen::Index>(out.size()));
    v = chol_.matrixL() * v;
  }

  double log_pdf(std::span<const double> x) const {
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    chol_.matrixL().solveInPlace(y);
    return base_.log_pdf(std::span<const double>(y.data(), x.size())) - log_det_half_;
  }

 private:
  Base base_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double log_det_half_ = 0.0;
};

template <class Law1, class Law2>
McResult mc_tv(const Law1& p, const Law2& q, const McConfig& cfg) {
  if (p.dim() != q.dim()) fail(Errc::domain_error, "mc_tv: laws have different dimensions");
  return mc_tv(
      p.dim(), [&](Engine& e, std::span<double> x) { p.sample(e, x); },
      [&](Engine& e, std::span<double> x) { q.sample(e, x); },
      [&](std::span<const double> x) { return p.log_pdf(x); }, [&](std::span<const double> x) { return q.log_pdf(x); },
      cfg);
}

template <class Law1, class Law2>
McResult mc_kl(const Law1& p, const Law2& q, const McConfig& cfg) {
  if (p.dim() != q.dim()) fail(Errc::domain_error, "mc_kl: laws have different dimensions");
  return mc_kl(
      p.dim(), [&](Engine& e, std::span<double> x) { p.sample(e, x); },
      [&](std::span<const double> x) { return p.log_pdf(x); }, [&](std::span<const double> x) { return q.log_pdf(x); },
      cfg);
}

}  // namespace divbound::oracle
