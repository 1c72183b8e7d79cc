#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace fired {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Column means.
template <typename Derived>
RowVector<typename Derived::Scalar> column_mean(const Eigen::MatrixBase<Derived>& x) {
  return x.colwise().mean();
}

/// Population (1/d) standard deviation of each column.
template <typename Derived>
RowVector<typename Derived::Scalar> column_std(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const RowVector<Scalar> mean = column_mean(x);
  const auto d = static_cast<Scalar>(x.rows());
  return ((x.rowwise() - mean).array().square().colwise().sum() / d).sqrt().matrix();
}

template <typename Derived>
typename Derived::Scalar population_variance(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<Scalar>(v.size());
}

/// Pearson correlation with population moments; 0 when either side is constant.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar pearson(const Eigen::MatrixBase<DerivedA>& a,
                                  const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const auto d = static_cast<Scalar>(a.size());
  const auto ca = (a.array() - a.mean()).eval();
  const auto cb = (b.array() - b.mean()).eval();
  const Scalar cov = (ca * cb).sum() / d;
  const Scalar sa = std::sqrt(ca.square().sum() / d);
  const Scalar sb = std::sqrt(cb.square().sum() / d);
  if (sa == Scalar(0) || sb == Scalar(0)) return Scalar(0);
  const Scalar r = cov / (sa * sb);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// Population correlation matrix of the columns of x. Constant columns get a
/// zero row/column with a unit diagonal.
template <typename Derived>
Matrix<typename Derived::Scalar> correlation_matrix(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> centered = x.rowwise() - column_mean(x);
  const auto d = static_cast<Scalar>(x.rows());
  Matrix<Scalar> cov = (centered.transpose() * centered) / d;
  Vector<Scalar> inv_sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < inv_sd.size(); ++i) {
    inv_sd(i) = inv_sd(i) > Scalar(0) ? Scalar(1) / inv_sd(i) : Scalar(0);
  }
  Matrix<Scalar> corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  corr.diagonal().setOnes();
  return corr;
}

}  // namespace fired
