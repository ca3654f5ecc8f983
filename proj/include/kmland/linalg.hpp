#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace kmland {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Columns form an orthonormal basis of the complement of the unit vector `normal`.
inline Matrix orthonormal_complement(const Vector& normal) {
  const auto d = normal.size();
  if (d == 1) return Matrix(1, 0);
  Eigen::HouseholderQR<Matrix> qr(normal);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  return q.rightCols(d - 1);
}

/// Mean and standard error accumulated in one pass (Welford).
class RunningStat {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  [[nodiscard]] std::size_t count() const { return n_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  [[nodiscard]] double stderr_of_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace kmland
