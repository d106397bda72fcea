#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "webzsl/metrics.hpp"
#include "webzsl/zsl.hpp"

using namespace webzsl;

namespace {

using MatD = Eigen::MatrixXd;

MatD gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return MatD::NullaryExpr(r, c, [&] { return g(rng); });
}

// Features generated from the prototypes, so every model can learn something.
ZslDataset planted(std::mt19937_64& rng, int seen = 6, int unseen = 4, int k = 5, int dim = 8, int per = 15) {
  ZslDataset d;
  const MatD M = gaussian(k, dim, rng);
  d.S_seen = gaussian(seen, k, rng);
  d.S_unseen = gaussian(unseen, k, rng);
  d.X = MatD(seen * per, dim);
  d.X_test = MatD(unseen * per, dim);
  std::normal_distribution<double> noise(0.0, 0.2);
  for (int c = 0; c < seen; ++c)
    for (int i = 0; i < per; ++i) {
      d.X.row(c * per + i) = d.S_seen.row(c) * M + MatD::NullaryExpr(1, dim, [&] { return noise(rng); });
      d.y.push_back(c);
    }
  for (int c = 0; c < unseen; ++c)
    for (int i = 0; i < per; ++i) {
      d.X_test.row(c * per + i) = d.S_unseen.row(c) * M + MatD::NullaryExpr(1, dim, [&] { return noise(rng); });
      d.y_test.push_back(c);
    }
  for (int c = 0; c < seen; ++c) d.seen_ids.push_back("s" + std::to_string(c));
  for (int c = 0; c < unseen; ++c) d.unseen_ids.push_back("u" + std::to_string(c));
  return d;
}

std::vector<ZslModel> all_models(const ZslDataset& d) {
  DeviseOptions dev;
  dev.epochs = 5;
  dev.lr = 0.01;
  return {fit_linear_v2s(d, 1.0), fit_linear_s2v(d, 1.0), fit_eszsl(d, 1.0, 1.0), fit_conse(d, 0.01),
          fit_devise(d, dev)};
}

}  // namespace

TEST_CASE("ridge in both directions matches gradient descent") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lam(0.1, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_instance(rng);
    const double l = lam(rng);
    CHECK((fit_linear_v2s(d, l).param("W") - testing::ridge_v2s_oracle(d, l)).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((fit_linear_s2v(d, l).param("W") - testing::ridge_s2v_oracle(d, l)).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("ESZSL closed form matches gradient descent") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> reg(0.1, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_instance(rng);
    const double g = reg(rng), l = reg(rng);
    CHECK((fit_eszsl(d, g, l).param("V") - testing::eszsl_oracle(d, g, l)).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("linear models interpolate without regularization") {
  std::mt19937_64 rng(3);
  ZslDataset d;
  d.X = MatD::Identity(4, 4);
  d.S_seen = gaussian(4, 3, rng);
  d.y = {0, 1, 2, 3};
  d.seen_ids = {"a", "b", "c", "d"};
  d.S_unseen = MatD(0, 3);
  const auto v2s = fit_linear_v2s(d, 0.0);
  CHECK((d.X * v2s.param("W") - d.S_seen).cwiseAbs().maxCoeff() < 1e-9);

  ZslDataset one;
  one.X = gaussian(1, 6, rng);
  // a scalar prototype keeps the one-sample normal equations nonsingular
  one.S_seen = MatD::Constant(1, 1, 1.5);
  one.y = {0};
  one.seen_ids = {"a"};
  one.S_unseen = MatD(0, 1);
  const auto s2v = fit_linear_s2v(one, 0.0);
  CHECK((one.S_seen * s2v.param("W") - one.X).cwiseAbs().maxCoeff() < 1e-9);
  one.S_seen = gaussian(1, 6, rng);
  one.S_unseen = MatD(0, 6);
  CHECK_THROWS_AS(fit_linear_s2v(one, 0.0), Error);

  // singular without a regularizer
  ZslDataset wide = d;
  wide.X = gaussian(2, 5, rng);
  wide.y = {0, 1};
  CHECK_THROWS_AS(fit_linear_v2s(wide, 0.0), Error);
  CHECK_THROWS_AS(fit_linear_v2s(d, -1.0), Error);
}

TEST_CASE("ridge vanishes as lambda grows") {
  std::mt19937_64 rng(4);
  const auto d = testing::random_instance(rng);
  CHECK(fit_linear_v2s(d, 1e12).param("W").cwiseAbs().maxCoeff() < 1e-8);
  CHECK(fit_linear_s2v(d, 1e12).param("W").cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ESZSL with one scalar prototype is ridge regression on the labels") {
  std::mt19937_64 rng(5);
  ZslDataset d;
  d.X = gaussian(30, 6, rng);
  d.S_seen = MatD::Ones(1, 1);
  d.y.assign(30, 0);
  d.seen_ids = {"a"};
  d.S_unseen = MatD(0, 1);
  const double g = 0.7, l = 2.0;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(30);
  const Eigen::VectorXd ridge =
      (d.X.transpose() * d.X + g * MatD::Identity(6, 6)).ldlt().solve(d.X.transpose() * ones);
  CHECK((fit_eszsl(d, g, l).param("V").col(0) - ridge / (1.0 + l)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(fit_eszsl(d, 0.0, 1.0), Error);
  CHECK_THROWS_AS(fit_eszsl(d, 1.0, -1.0), Error);
}

TEST_CASE("ESZSL scores are invariant to scaling S by c with lambda by c^2") {
  std::mt19937_64 rng(6);
  const auto d = planted(rng);
  const double c = 3.5;
  ZslDataset scaled = d;
  scaled.S_seen *= c;
  const auto a = fit_eszsl(d, 0.5, 2.0);
  const auto b = fit_eszsl(scaled, 0.5, 2.0 * c * c);
  const MatD sa = score_matrix(a, d.X_test, d.S_unseen);
  const MatD sb = score_matrix(b, d.X_test, d.S_unseen * c);
  CHECK((sa - sb).cwiseAbs().maxCoeff() < 1e-9 * sa.cwiseAbs().maxCoeff());
  CHECK(rank_all(a, d.X_test, d.S_unseen) == rank_all(b, d.X_test, d.S_unseen * c));
}

TEST_CASE("ESZSL label encodings") {
  const MatD pm = eszsl_labels({0, 2}, 3, LabelEncoding::plus_minus_one);
  const MatD zo = eszsl_labels({0, 2}, 3, LabelEncoding::zero_one);
  MatD want(2, 3);
  want << 1, -1, -1, -1, -1, 1;
  CHECK(pm == want);
  want << 1, 0, 0, 0, 0, 1;
  CHECK(zo == want);
}

TEST_CASE("ConSE objective gradient and optimum") {
  std::mt19937_64 rng(7);
  const auto d = planted(rng, 4, 2, 3, 5, 6);
  MatD Xb(d.X.rows(), d.X.cols() + 1);
  Xb << d.X, MatD::Ones(d.X.rows(), 1);
  const MatD W = gaussian(Xb.cols(), 4, rng, 0.3);
  MatD grad;
  conse_objective(W, Xb, d.y, 0.1, &grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      MatD p = W, m = W;
      p(i, j) += h;
      m(i, j) -= h;
      const double fd = (conse_objective(p, Xb, d.y, 0.1) - conse_objective(m, Xb, d.y, 0.1)) / (2 * h);
      CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }

  const auto model = fit_conse(d, 0.1);
  conse_objective(model.param("W"), Xb, d.y, 0.1, &grad);
  CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);
  const MatD P = conse_probabilities(model, d.X);
  CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("ConSE embedding: degenerate softmax, T = 1, two-step oracle") {
  std::mt19937_64 rng(8);
  const auto d = planted(rng, 5, 3, 4, 6, 10);
  ZslModel m{ModelKind::conse, {}, {{"reg", 0.0}, {"T", 3.0}}};
  m.params["seen_prototypes"] = d.S_seen;

  // bias row only, all mass on class 2
  MatD W = MatD::Zero(d.X.cols() + 1, 5);
  W(d.X.cols(), 2) = 1000.0;
  m.params["W"] = W;
  CHECK((conse_embed(m, d.X_test, 3).row(0) - d.S_seen.row(2)).cwiseAbs().maxCoeff() < 1e-9);

  const auto fitted = fit_conse(d, 0.01);
  const MatD P = conse_probabilities(fitted, d.X_test);
  const MatD e1 = conse_embed(fitted, d.X_test, 1);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    Eigen::Index best = 0;
    P.row(i).maxCoeff(&best);
    CHECK((e1.row(i) - d.S_seen.row(best)).cwiseAbs().maxCoeff() < 1e-12);
  }

  // independent softmax, top-3 convex combination, cosine
  const MatD& Wf = fitted.param("W");
  for (Eigen::Index i = 0; i < d.X_test.rows(); ++i) {
    Eigen::VectorXd logits = Wf.topRows(d.X.cols()).transpose() * d.X_test.row(i).transpose() +
                             Wf.row(d.X.cols()).transpose();
    Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
    p /= p.sum();
    std::vector<int> order(5);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return p(a) > p(b); });
    Eigen::RowVectorXd emb = Eigen::RowVectorXd::Zero(4);
    double z = 0;
    for (int t = 0; t < 3; ++t) {
      emb += p(order[t]) * d.S_seen.row(order[t]);
      z += p(order[t]);
    }
    emb /= z;
    const Eigen::VectorXd got = predict_conse(fitted, d.X_test.row(i).transpose(), d.S_unseen, 3);
    for (Eigen::Index u = 0; u < d.S_unseen.rows(); ++u) {
      const double want = emb.dot(d.S_unseen.row(u)) / (emb.norm() * d.S_unseen.row(u).norm());
      CHECK(got(u) == doctest::Approx(want).epsilon(1e-10));
    }
  }

  // T beyond the seen count clamps
  CHECK(predict_conse(fitted, d.X_test.row(0).transpose(), d.S_unseen, 50)
            .isApprox(predict_conse(fitted, d.X_test.row(0).transpose(), d.S_unseen, 5)));
}

TEST_CASE("DeViSE: satisfied margins leave W unchanged") {
  ZslDataset d;
  d.X = MatD::Identity(2, 2);
  d.y = {0, 1};
  d.S_seen = MatD::Identity(2, 2);
  d.seen_ids = {"a", "b"};
  d.S_unseen = MatD(0, 2);
  DeviseOptions opt;
  opt.initial = MatD::Identity(2, 2);
  opt.epochs = 20;
  CHECK(fit_devise(d, opt).param("W") == MatD::Identity(2, 2));
  opt.initial = MatD::Identity(2, 2) * 0.01;
  CHECK(fit_devise(d, opt).param("W") != *opt.initial);
}

TEST_CASE("DeViSE hinge gradient matches finite differences") {
  std::mt19937_64 rng(9);
  const double h = 1e-5;
  int violating = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const MatD W = gaussian(4, 3, rng);
    const Eigen::VectorXd x = gaussian(4, 1, rng), sp = gaussian(3, 1, rng), sn = gaussian(3, 1, rng);
    MatD grad;
    if (devise_hinge(W, x, sp, sn, 5.0, &grad) <= 0) continue;
    ++violating;
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        MatD p = W, m = W;
        p(i, j) += h;
        m(i, j) -= h;
        const double fd = (devise_hinge(p, x, sp, sn, 5.0) - devise_hinge(m, x, sp, sn, 5.0)) / (2 * h);
        CHECK(std::abs(grad(i, j) - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
      }
  }
  CHECK(violating > 5);
}

TEST_CASE("DeViSE is reproducible for a seed") {
  std::mt19937_64 rng(10);
  const auto d = planted(rng);
  DeviseOptions opt;
  opt.epochs = 3;
  opt.seed = 4;
  CHECK(fit_devise(d, opt).param("W") == fit_devise(d, opt).param("W"));
  opt.sum_all = true;
  CHECK(fit_devise(d, opt).param("W") == fit_devise(d, opt).param("W"));
  DeviseOptions other = opt;
  other.seed = 5;
  CHECK(fit_devise(d, other).param("W") != fit_devise(d, opt).param("W"));
}

TEST_CASE("ranking order and tie rule") {
  Eigen::VectorXd s(2);
  s << 0.9, 0.1;
  auto r = rank_scores(s);
  CHECK(r[0].index == 0);
  CHECK(r[1].index == 1);
  Eigen::VectorXd t(4);
  t << 0.5, 0.7, 0.7, 0.5;
  r = rank_scores(t);
  CHECK(r[0].index == 1);
  CHECK(r[1].index == 2);
  CHECK(r[2].index == 0);
  CHECK(r[3].index == 3);
}

TEST_CASE("dimension mismatches are rejected") {
  std::mt19937_64 rng(11);
  const auto d = planted(rng);
  const auto m = fit_linear_s2v(d, 1.0);
  CHECK_THROWS_AS(predict_rank(m, Eigen::VectorXd::Zero(d.X.cols() + 1), d.S_unseen), Error);
  CHECK_THROWS_AS(predict_rank(m, d.X_test.row(0).transpose(), MatD::Zero(3, 2)), Error);
}

TEST_CASE("positive scaling and permutation of unseen prototypes") {
  std::mt19937_64 rng(12);
  const auto d = planted(rng);
  std::vector<int> perm(static_cast<std::size_t>(d.S_unseen.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  MatD permuted(d.S_unseen.rows(), d.S_unseen.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) permuted.row(static_cast<Eigen::Index>(i)) = d.S_unseen.row(perm[i]);

  for (const auto& m : all_models(d)) {
    INFO(to_string(m.kind));
    const auto base = rank_all(m, d.X_test, d.S_unseen);
    CHECK(rank_all(m, d.X_test, d.S_unseen * 7.25) == base);
    const auto p = rank_all(m, d.X_test, permuted);
    for (std::size_t i = 0; i < base.size(); ++i)
      for (std::size_t r = 0; r < base[i].size(); ++r) CHECK(perm[static_cast<std::size_t>(p[i][r])] == base[i][r]);
  }
}

TEST_CASE("planted data is learnable and top-1 agrees with the metric") {
  std::mt19937_64 rng(13);
  const auto d = planted(rng);
  const auto m = fit_linear_s2v(d, 1.0);
  const auto ranks = rank_all(m, d.X_test, d.S_unseen);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < d.X_test.rows(); ++i)
    hits += predict_rank(m, d.X_test.row(i).transpose(), d.S_unseen)[0].index == d.y_test[static_cast<std::size_t>(i)];
  CHECK(topk_accuracy(ranks, d.y_test, 1) == doctest::Approx(double(hits) / double(d.X_test.rows())));
  CHECK(topk_accuracy(ranks, d.y_test, 1) > 0.5);
}

TEST_CASE("label-shuffled data stays near chance") {
  std::mt19937_64 rng(14);
  auto d = planted(rng, 10, 10, 6, 8, 100);
  std::shuffle(d.y.begin(), d.y.end(), rng);
  std::shuffle(d.y_test.begin(), d.y_test.end(), rng);
  REQUIRE(d.X_test.rows() == 1000);
  const double cu = 10.0;
  for (const auto& m : all_models(d)) {
    INFO(to_string(m.kind));
    const double acc = topk_accuracy(rank_all(m, d.X_test, d.S_unseen), d.y_test, 1);
    CHECK(acc >= 0.5 / cu);
    CHECK(acc <= 2.0 / cu);
  }
}

TEST_CASE("fit_model dispatch and model files") {
  testing::TempDir dir("model");
  std::mt19937_64 rng(15);
  const auto d = planted(rng);
  CHECK_THROWS_AS(fit_model(d, ModelKind::eszsl, {{"gamma", 1.0}}), Error);
  CHECK(parse_model_kind("linear_s2v") == ModelKind::linear_s2v);
  CHECK_THROWS_AS(parse_model_kind("sync"), Error);
  for (auto kind : {ModelKind::linear_v2s, ModelKind::linear_s2v, ModelKind::eszsl, ModelKind::conse,
                    ModelKind::devise}) {
    Hyperparameters h;
    for (const auto& [name, values] : default_grid(kind)) h[name] = values[3];
    const auto m = fit_model(d, kind, h, 3);
    save_model(dir / "m.txt", m);
    const auto back = load_model(dir / "m.txt");
    CHECK(back.kind == kind);
    CHECK(back.hyper == m.hyper);
    CHECK((score_matrix(back, d.X_test, d.S_unseen) - score_matrix(m, d.X_test, d.S_unseen)).cwiseAbs().maxCoeff() <
          1e-9);
  }
}

TEST_CASE("dataset validation") {
  std::mt19937_64 rng(16);
  auto d = planted(rng);
  CHECK_NOTHROW(d.validate());
  auto bad = d;
  bad.y[0] = 99;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.unseen_ids[0] = d.seen_ids[0];
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.S_unseen = MatD::Zero(4, 2);
  CHECK_THROWS_AS(bad.validate(), Error);
}
