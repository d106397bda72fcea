#include <doctest.h>

#include "support.hpp"
#include "webzsl/prototypes.hpp"

using namespace webzsl;

namespace {

WordVectors vectors(const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
  WordVectors wv;
  wv.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].second.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    wv.words.push_back(rows[i].first);
    for (std::size_t k = 0; k < rows[i].second.size(); ++k)
      wv.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i].second[k];
  }
  wv.rebuild_index();
  return wv;
}

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

}  // namespace

TEST_CASE("multi-word variant is the mean of its tokens") {
  const auto wv = vectors({{"ivory", {1, 0}}, {"gull", {0, 1}}});
  const auto p = build_prototypes({{"gull", {"ivory gull"}}}, wv);
  CHECK(p.matrix.row(0).isApprox(row({0.5, 0.5})));
  CHECK_FALSE(p.normalized);
  CHECK(p.unresolved.empty());
}

TEST_CASE("single in-vocabulary word is its own prototype") {
  const auto wv = vectors({{"owl", {0.25f, -3.0f}}});
  CHECK(build_prototypes({{"owl", {"Owl"}}}, wv).matrix.row(0).isApprox(row({0.25, -3.0})));
}

TEST_CASE("variants are averaged after their tokens") {
  const auto wv = load_embeddings(std::filesystem::path(WEBZSL_FIXTURES) / "word2vec_sample.txt");
  const auto p = build_prototypes({{"morel", {"morel", "morchella"}}}, wv);
  // (0.5 + 1.5)/2, (0.25 - 0.25)/2, (-1.5 + 0.5)/2
  CHECK(p.matrix.row(0).isApprox(row({1.0, 0.0, -0.5})));
}

TEST_CASE("fallbacks: concatenated form, partial tokens, subwords") {
  const auto wv = vectors({{"ivorygull", {2, 2}}, {"gull", {0, 1}}, {"owl", {4, 0}}});
  // "ivory" is unknown, the joined form wins over the partial mean
  CHECK(build_prototypes({{"c", {"ivory gull"}}}, wv).matrix.row(0).isApprox(row({2, 2})));
  // no joined form, so drop the unknown token
  CHECK(build_prototypes({{"c", {"snowy owl"}}}, wv).matrix.row(0).isApprox(row({4, 0})));

  Vocabulary vocab({"gull"}, {1});
  TrainerConfig c;
  c.dim = 3;
  c.subword = SubwordConfig{3, 3, 53};
  auto m = init_embeddings(1, c);
  m.input.setOnes();
  const auto sub = make_word_vectors(m, vocab);
  const auto p = build_prototypes({{"x", {"gulls"}}, {"y", {"gull"}}}, sub);
  CHECK(p.unresolved.empty());
  CHECK(p.matrix.row(0).isApprox(row({1, 1, 1})));
}

TEST_CASE("unresolvable classes get zero rows; all unresolvable is an error") {
  const auto wv = vectors({{"owl", {1, 1}}});
  const auto p = build_prototypes({{"a", {"owl"}}, {"b", {"zzz", "yyy"}}}, wv);
  CHECK(p.unresolved == std::vector<std::string>{"b"});
  CHECK(p.matrix.row(1).isZero(0));
  CHECK_THROWS_AS(build_prototypes({{"b", {"zzz"}}}, wv), Error);
}

TEST_CASE("normalize: unit rows, disable, zero rows, idempotence") {
  PrototypeSet p;
  p.class_ids = {"a", "b"};
  p.matrix = Eigen::MatrixXd(2, 2);
  p.matrix << 3, 4, 0, 0;
  const auto n = normalize(p);
  CHECK(n.normalized);
  CHECK(n.matrix.row(0).isApprox(row({0.6, 0.8})));
  CHECK(n.matrix.row(1).isZero(0));
  CHECK(n.zero_rows == std::vector<std::string>{"b"});
  CHECK(normalize(p, false).matrix == p.matrix);
  CHECK_FALSE(normalize(p, false).normalized);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  PrototypeSet r;
  r.matrix = Eigen::MatrixXd(20, 9);
  for (int i = 0; i < 20; ++i) {
    r.class_ids.push_back(testing::word(static_cast<std::size_t>(i)));
    for (int k = 0; k < 9; ++k) r.matrix(i, k) = nd(rng) * 50;
  }
  const auto once = normalize(r);
  for (int i = 0; i < 20; ++i) CHECK(std::abs(once.matrix.row(i).norm() - 1.0) < 1e-6);
  CHECK((normalize(once).matrix - once.matrix).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("duplicate and permuted variants do not change the prototype") {
  const auto wv = vectors({{"a", {1, 0, 2}}, {"b", {0, 5, 1}}, {"c", {3, 3, 3}}});
  const auto one = build_prototypes({{"x", {"a b"}}}, wv);
  CHECK(build_prototypes({{"x", {"a b", "a b", "a b"}}}, wv).matrix.isApprox(one.matrix));
  const auto p1 = build_prototypes({{"x", {"a", "b c", "c"}}}, wv);
  const auto p2 = build_prototypes({{"x", {"c", "a", "b c"}}}, wv);
  CHECK((p1.matrix - p2.matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("class-name and prototype files round-trip") {
  testing::TempDir dir("proto");
  const std::vector<ClassNameEntry> entries{{"n01", {"ivory gull", "pagophila eburnea"}}, {"n02", {"owl"}}};
  save_class_names(dir / "c.tsv", entries);
  const auto back = load_class_names(dir / "c.tsv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].class_id == "n01");
  CHECK(back[0].variants == entries[0].variants);
  CHECK(testing::read_file(dir / "c.tsv").rfind("n01\tivory gull|pagophila eburnea\n", 0) == 0);

  testing::write_file(dir / "bad.tsv", "n01\n");
  CHECK_THROWS_AS(load_class_names(dir / "bad.tsv"), Error);

  const auto wv = vectors({{"owl", {1, 2}}, {"gull", {3, 4}}});
  const auto p = normalize(build_prototypes(entries, wv));
  save_prototypes(dir / "p.txt", p);
  const auto q = load_prototypes(dir / "p.txt");
  CHECK(q.class_ids == p.class_ids);
  CHECK((q.matrix - p.matrix).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(q.select({"n02"}).matrix.row(0).isApprox(p.matrix.row(1), 1e-6));
  CHECK_THROWS_AS(q.select({"n03"}), Error);
}
