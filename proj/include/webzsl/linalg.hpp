#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "webzsl/corpus.hpp"

namespace webzsl {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class SingularSystem : public Error {
 public:
  using Error::Error;
};

// Solves (G + lambda I) X = R for symmetric positive semi-definite G.
// With lambda == 0 a rank-deficient G is rejected.
template <typename GT, typename RT>
auto solve_regularized(const Eigen::MatrixBase<GT>& gram, const Eigen::MatrixBase<RT>& rhs,
                       typename GT::Scalar lambda) {
  using Scalar = typename GT::Scalar;
  if (lambda < 0) throw Error("regularizer must be >= 0");
  Mat<Scalar> g = gram;
  if (lambda > 0) {
    g.diagonal().array() += lambda;
    Eigen::LLT<Mat<Scalar>> llt(g);
    if (llt.info() == Eigen::Success) return Mat<Scalar>(llt.solve(rhs));
  }
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(g);
  if (qr.rank() < g.rows())
    throw SingularSystem("normal equations are singular; use a regularizer > 0");
  return Mat<Scalar>(qr.solve(rhs));
}

// argmin_W ||A W - B||^2 + lambda ||W||^2. Uses the dual system when A has
// fewer rows than columns and lambda > 0.
template <typename AT, typename BT>
auto ridge_solve(const Eigen::MatrixBase<AT>& a, const Eigen::MatrixBase<BT>& b,
                 typename AT::Scalar lambda) {
  using Scalar = typename AT::Scalar;
  if (lambda > 0 && a.rows() < a.cols()) {
    Mat<Scalar> k = a * a.transpose();
    return Mat<Scalar>(a.transpose() * solve_regularized(k, b, lambda));
  }
  Mat<Scalar> g = a.transpose() * a;
  Mat<Scalar> r = a.transpose() * b;
  return solve_regularized(g, r, lambda);
}

// Rows scaled to unit l2 norm; zero rows stay zero.
template <typename Derived>
auto normalize_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Scalar n = out.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

// Cosine similarity of every row of `a` with every row of `b`.
template <typename AT, typename BT>
auto cosine_matrix(const Eigen::MatrixBase<AT>& a, const Eigen::MatrixBase<BT>& b) {
  using Scalar = typename AT::Scalar;
  return Mat<Scalar>(normalize_rows(a) * normalize_rows(b).transpose());
}

}  // namespace webzsl
