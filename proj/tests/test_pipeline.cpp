#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "synth_inputs.hpp"
#include "webzsl/matrix_io.hpp"
#include "webzsl/pipeline.hpp"

using namespace webzsl;

namespace {

std::string metrics_text(const EvalReport& r) {
  std::ostringstream out;
  write_metrics_csv(out, r);
  return out.str();
}

}  // namespace

TEST_CASE("voted pipeline on the synthetic corpus beats chance") {
  const auto in = testing::synth_inputs({}, {});
  const auto r = run_pipeline(in, testing::synth_settings(1));
  CHECK(r.report.samples == 400);
  CHECK(r.report.topk.at(1) >= 0.3);
  CHECK(r.report.topk.at(5) >= r.report.topk.at(1));
  CHECK(r.report.topk.at(10) == 1.0);
  CHECK(r.unresolved.empty());
  CHECK(r.pieces == 20 * 200);
  CHECK(r.report.validation_accuracy);
}

TEST_CASE("deterministic reruns give identical reports") {
  SynthCorpusConfig cc;
  cc.pieces_per_concept = 80;
  const auto in = testing::synth_inputs(cc, {});
  auto s = testing::synth_settings(3);
  s.trainer.sample = 1e-3;
  const auto a = metrics_text(run_pipeline(in, s).report);
  CHECK(a == metrics_text(run_pipeline(in, s).report));
  s.mode = PairMode::raw;
  const auto raw = run_pipeline(in, s);
  CHECK(metrics_text(raw.report) == metrics_text(run_pipeline(in, s).report));
}

TEST_CASE("metrics CSV layout") {
  EvalReport r;
  r.samples = 10;
  r.topk = {{1, 0.5}, {5, 0.9}};
  r.macro_top1 = 0.45;
  r.validation_accuracy = 0.25;
  r.hyper = {{"lambda", 0.1}};
  r.empty_classes = {"c9"};
  CHECK(metrics_text(r) ==
        "metric,value\nsamples,10\ntop1,0.500000\ntop5,0.900000\nmacro_top1,0.450000\n"
        "validation_top1,0.250000\nhyper_lambda,0.100000\nempty_class,c9\n");
}

TEST_CASE("dataset assembly") {
  VisualData v;
  v.X_train = Eigen::MatrixXd::Ones(2, 3);
  v.train_labels = {"a", "b"};
  v.X_test = Eigen::MatrixXd::Ones(1, 3);
  v.test_labels = {"c"};
  v.seen_ids = {"a", "b"};
  v.unseen_ids = {"c"};
  PrototypeSet p;
  p.class_ids = {"c", "b", "a"};
  p.matrix = Eigen::MatrixXd::Identity(3, 3);
  const auto d = make_dataset(v, p);
  CHECK(d.y == std::vector<int>{0, 1});
  CHECK(d.S_seen.row(0) == p.matrix.row(2));
  CHECK(d.y_test == std::vector<int>{0});
  v.test_labels = {"a"};
  CHECK_THROWS_AS(make_dataset(v, p), Error);
  v.test_labels = {"c"};
  v.unseen_ids = {"zz"};
  CHECK_THROWS_AS(make_dataset(v, p), Error);
}

TEST_CASE("visual files load from a directory and predictions are written") {
  testing::TempDir dir("vis");
  const auto corpus = synth_corpus({});
  std::vector<std::string> ids;
  for (const auto& c : corpus.concepts) ids.push_back(c.concept_id);
  const auto sv = synth_visual(ids, corpus.attribute_matrix(), {});
  save_synth_visual(dir.path(), sv);
  const auto v = load_visual(VisualFiles::in_directory(dir.path()));
  CHECK(v.seen_ids == sv.seen_ids);
  CHECK(v.test_labels == sv.test_labels);
  CHECK((v.X_train - sv.X_train).cwiseAbs().maxCoeff() < 1e-12);

  PrototypeSet p;
  p.class_ids = ids;
  p.matrix = corpus.attribute_matrix();
  const auto d = make_dataset(v, normalize(p));
  const auto m = fit_linear_s2v(d, 1.0);
  save_predictions(dir / "pred.csv", m, d, 3);
  std::istringstream lines(testing::read_file(dir / "pred.csv"));
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "true,pred1,pred2,pred3");
  std::size_t n = 0;
  while (std::getline(lines, row)) ++n;
  CHECK(n == 400);
  const auto r = evaluate(m, d, {1, 5});
  CHECK(r.topk.at(1) > 0.3);
}
