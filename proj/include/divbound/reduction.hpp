#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divbound/error.hpp"

namespace divbound {

/// Diagonal of the reduced second covariance, with cached extremes and log-sum.
class DiagonalScales {
 public:
  DiagonalScales() = default;

  explicit DiagonalScales(std::vector<double> d) : d_(std::move(d)) {
    if (d_.empty()) fail(Errc::domain_error, "scales: need at least one entry");
    d_minus_ = d_plus_ = d_.front();
    for (double v : d_) {
      if (!(v > 0.0) || !std::isfinite(v)) fail(Errc::domain_error, "scales: entries must be positive and finite");
      d_minus_ = std::min(d_minus_, v);
      d_plus_ = std::max(d_plus_, v);
      sum_log_d_ += std::log(v);
      sum_inv_d_ += 1.0 / v;
    }
  }

  static DiagonalScales constant(std::size_t n, double value) { return DiagonalScales(std::vector<double>(n, value)); }

  const std::vector<double>& values() const { return d_; }
  std::size_t size() const { return d_.size(); }
  double operator[](std::size_t i) const { return d_[i]; }
  double d_minus() const { return d_minus_; }
  double d_plus() const { return d_plus_; }
  double sum_log_d() const { return sum_log_d_; }
  double sum_inv_d() const { return sum_inv_d_; }
  bool all_equal() const { return d_minus_ == d_plus_; }

 private:
  std::vector<double> d_;
  double d_minus_ = 1.0;
  double d_plus_ = 1.0;
  double sum_log_d_ = 0.0;
  double sum_inv_d_ = 0.0;
};

struct CovariancePair {
  Eigen::MatrixXd sigma1;
  Eigen::MatrixXd sigma2;
};

namespace detail {

inline void check_symmetric(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) fail(Errc::domain_error, std::string(name) + " must be square and nonempty");
  if (!m.allFinite()) fail(Errc::domain_error, std::string(name) + " has non-finite entries");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(Errc::domain_error, std::string(name) + " is not symmetric");
}

}  // namespace detail

/// Eigenvalues of L^{-1} sigma2 L^{-T} with sigma1 = L L^T, ascending.  The pair
/// (sigma1, sigma2) and (I, diag(d)) have the same f-divergences between the
/// corresponding centered elliptical laws.
inline DiagonalScales reduce_pair(const CovariancePair& pair) {
  detail::check_symmetric(pair.sigma1, "sigma1");
  detail::check_symmetric(pair.sigma2, "sigma2");
  if (pair.sigma1.rows() != pair.sigma2.rows()) fail(Errc::domain_error, "sigma1 and sigma2 differ in size");
  if (pair.sigma1.rows() > 5000) fail(Errc::unsupported_dimension, "reduce_pair: n > 5000 is not supported");

  const Eigen::LLT<Eigen::MatrixXd> chol1(pair.sigma1);
  if (chol1.info() != Eigen::Success) fail(Errc::not_positive_definite, "sigma1 is not positive definite");
  const Eigen::LLT<Eigen::MatrixXd> chol2(pair.sigma2);
  if (chol2.info() != Eigen::Success) fail(Errc::not_positive_definite, "sigma2 is not positive definite");

  // M = L^{-1} sigma2 L^{-T}, by two triangular solves.
  const Eigen::MatrixXd half = chol1.matrixL().solve(pair.sigma2);
  Eigen::MatrixXd m = chol1.matrixL().solve(half.transpose());
  m = (0.5 * (m + m.transpose())).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) fail(Errc::internal, "reduce_pair: eigen solver failed");
  std::vector<double> d(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  std::sort(d.begin(), d.end());
  if (d.front() <= 0.0) fail(Errc::not_positive_definite, "reduce_pair: reduced matrix is not positive definite");
  return DiagonalScales(std::move(d));
}

}  // namespace divbound
