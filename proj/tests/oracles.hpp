#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "webzsl/zsl.hpp"

namespace testing {

inline double top_eigenvalue(const Eigen::MatrixXd& sym) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

// Nesterov descent on a smooth convex quadratic given its gradient and a
// Lipschitz bound; stops once the gradient vanishes.
template <typename Grad>
Eigen::MatrixXd descend(Eigen::MatrixXd W, double lipschitz, Grad grad, int iterations = 200000) {
  const double step = 1.0 / lipschitz;
  Eigen::MatrixXd prev = W, look = W;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd g = grad(look);
    if (g.cwiseAbs().maxCoeff() < 1e-11) return look;
    prev = W;
    W = look - step * g;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    look = W + ((t - 1.0) / t_next) * (W - prev);
    t = t_next;
  }
  return W;
}

inline Eigen::MatrixXd target_rows(const webzsl::ZslDataset& d) {
  Eigen::MatrixXd T(d.X.rows(), d.S_seen.cols());
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) T.row(i) = d.S_seen.row(d.y[static_cast<std::size_t>(i)]);
  return T;
}

// argmin sum ||W'x_i - s_{y_i}||^2 + lambda ||W||^2
inline Eigen::MatrixXd ridge_v2s_oracle(const webzsl::ZslDataset& d, double lambda) {
  const Eigen::MatrixXd T = target_rows(d);
  const Eigen::MatrixXd G = d.X.transpose() * d.X;
  const Eigen::MatrixXd XT = d.X.transpose() * T;
  return descend(Eigen::MatrixXd::Zero(d.X.cols(), T.cols()), 2 * (top_eigenvalue(G) + lambda),
                 [&](const Eigen::MatrixXd& W) { return Eigen::MatrixXd(2 * (G * W - XT + lambda * W)); });
}

// argmin sum ||W's_{y_i} - x_i||^2 + lambda ||W||^2
inline Eigen::MatrixXd ridge_s2v_oracle(const webzsl::ZslDataset& d, double lambda) {
  const Eigen::MatrixXd T = target_rows(d);
  const Eigen::MatrixXd G = T.transpose() * T;
  const Eigen::MatrixXd TX = T.transpose() * d.X;
  return descend(Eigen::MatrixXd::Zero(T.cols(), d.X.cols()), 2 * (top_eigenvalue(G) + lambda),
                 [&](const Eigen::MatrixXd& W) { return Eigen::MatrixXd(2 * (G * W - TX + lambda * W)); });
}

// argmin ||XVS' - Y||^2 + gamma ||VS'||^2 + lambda ||XV||^2 + gamma lambda ||V||^2
inline Eigen::MatrixXd eszsl_oracle(const webzsl::ZslDataset& d, double gamma, double lambda) {
  Eigen::MatrixXd Y = -Eigen::MatrixXd::Ones(d.X.rows(), d.S_seen.rows());
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) Y(i, d.y[static_cast<std::size_t>(i)]) = 1.0;
  const Eigen::MatrixXd A = d.X.transpose() * d.X + gamma * Eigen::MatrixXd::Identity(d.X.cols(), d.X.cols());
  const Eigen::MatrixXd B =
      d.S_seen.transpose() * d.S_seen + lambda * Eigen::MatrixXd::Identity(d.S_seen.cols(), d.S_seen.cols());
  const Eigen::MatrixXd R = d.X.transpose() * Y * d.S_seen;
  return descend(Eigen::MatrixXd::Zero(d.X.cols(), d.S_seen.cols()), 2 * top_eigenvalue(A) * top_eigenvalue(B),
                 [&](const Eigen::MatrixXd& V) { return Eigen::MatrixXd(2 * (A * V * B - R)); });
}

// Small random instance: N <= 50, D <= 20, K <= 10, C_s <= 5.
inline webzsl::ZslDataset random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(5, 50), dd(2, 20), kd(1, 10), cd(1, 5);
  std::normal_distribution<double> g;
  webzsl::ZslDataset d;
  const int n = nd(rng), dim = dd(rng), k = kd(rng), c = cd(rng);
  d.X = Eigen::MatrixXd::NullaryExpr(n, dim, [&] { return g(rng); });
  d.S_seen = Eigen::MatrixXd::NullaryExpr(c, k, [&] { return g(rng); });
  std::uniform_int_distribution<int> label(0, c - 1);
  for (int i = 0; i < n; ++i) d.y.push_back(label(rng));
  for (int i = 0; i < c; ++i) d.seen_ids.push_back("s" + std::to_string(i));
  d.S_unseen = Eigen::MatrixXd(0, k);
  return d;
}

}  // namespace testing
