#include "webzsl/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "webzsl/embeddings_io.hpp"
#include "webzsl/matrix_io.hpp"
#include "webzsl/metrics.hpp"

namespace webzsl {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<int> label_indices(const std::vector<std::string>& labels, const std::vector<std::string>& ids,
                               const char* what) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<int>(i));
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = index.find(l);
    if (it == index.end()) throw Error(std::string(what) + " label '" + l + "' is not in its class list");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

VisualFiles VisualFiles::in_directory(const std::filesystem::path& dir) {
  return {dir / "train_features.txt", dir / "train_labels.txt", dir / "test_features.txt",
          dir / "test_labels.txt",    dir / "seen.txt",         dir / "unseen.txt"};
}

VisualData load_visual(const VisualFiles& files) {
  VisualData v;
  v.X_train = load_matrix(files.train_features);
  v.train_labels = load_lines(files.train_labels);
  v.X_test = load_matrix(files.test_features);
  v.test_labels = load_lines(files.test_labels);
  v.seen_ids = load_lines(files.seen);
  v.unseen_ids = load_lines(files.unseen);
  if (static_cast<std::size_t>(v.X_train.rows()) != v.train_labels.size())
    throw Error("training features and labels differ in count");
  if (static_cast<std::size_t>(v.X_test.rows()) != v.test_labels.size())
    throw Error("test features and labels differ in count");
  return v;
}

ZslDataset make_dataset(const VisualData& visual, const PrototypeSet& protos) {
  ZslDataset d;
  d.X = visual.X_train;
  d.X_test = visual.X_test;
  d.seen_ids = visual.seen_ids;
  d.unseen_ids = visual.unseen_ids;
  d.S_seen = protos.select(visual.seen_ids).matrix;
  d.S_unseen = protos.select(visual.unseen_ids).matrix;
  d.y = label_indices(visual.train_labels, visual.seen_ids, "training");
  d.y_test = label_indices(visual.test_labels, visual.unseen_ids, "test");
  d.validate();
  return d;
}

EvalReport evaluate(const ZslModel& model, const ZslDataset& data, const std::vector<std::size_t>& ks) {
  EvalReport r;
  r.samples = static_cast<std::size_t>(data.X_test.rows());
  r.hyper = model.hyper;
  const Rankings rankings = rank_all(model, data.X_test, data.S_unseen);
  for (std::size_t k : ks) r.topk[k] = topk_accuracy(rankings, data.y_test, k);
  const auto per_class = per_class_accuracy(rankings, data.y_test, static_cast<int>(data.S_unseen.rows()));
  r.macro_top1 = per_class.macro;
  for (int c : per_class.empty_classes)
    r.empty_classes.push_back(data.unseen_ids.empty() ? std::to_string(c)
                                                      : data.unseen_ids[static_cast<std::size_t>(c)]);
  return r;
}

void write_metrics_csv(std::ostream& out, const EvalReport& report) {
  out << "metric,value\n";
  out << "samples," << report.samples << '\n';
  for (const auto& [k, acc] : report.topk) out << "top" << k << ',' << fixed6(acc) << '\n';
  out << "macro_top1," << fixed6(report.macro_top1) << '\n';
  if (report.validation_accuracy) out << "validation_top1," << fixed6(*report.validation_accuracy) << '\n';
  for (const auto& [name, value] : report.hyper) out << "hyper_" << name << ',' << fixed6(value) << '\n';
  for (const auto& c : report.empty_classes) out << "empty_class," << c << '\n';
}

void save_metrics_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_metrics_csv(out, report);
  if (!out) throw Error("write failed: " + path.string());
}

void save_predictions(const std::filesystem::path& path, const ZslModel& model, const ZslDataset& data,
                      std::size_t depth) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto rankings = rank_all(model, data.X_test, data.S_unseen);
  out << "true";
  for (std::size_t k = 1; k <= depth; ++k) out << ",pred" << k;
  out << '\n';
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    out << data.unseen_ids[static_cast<std::size_t>(data.y_test[i])];
    for (std::size_t k = 0; k < depth && k < rankings[i].size(); ++k)
      out << ',' << data.unseen_ids[static_cast<std::size_t>(rankings[i][k])];
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineSettings& settings) {
  PipelineResult result;
  const auto corpus = settings.ablate_fraction > 0.0
                          ? ablate_corpus(inputs.corpus, settings.ablate_fraction, settings.seed)
                          : inputs.corpus;
  result.pieces = piece_count(corpus);
  const Vocabulary vocab = build_vocabulary(corpus, settings.min_count);
  result.vocab_size = vocab.size();
  const auto pairs = make_pairs(corpus, vocab, settings.mode, settings.vote);
  result.pairs = pairs.size();
  if (pairs.empty()) throw Error("the corpus produced no training pairs");

  TrainerConfig trainer = settings.trainer;
  trainer.seed = settings.seed;
  trainer.threads = settings.threads;
  trainer.deterministic = settings.threads <= 1;
  const EmbeddingMatrix m = train(pairs, vocab, trainer);
  const WordVectors wv = make_word_vectors(m, vocab);

  PrototypeSet protos = normalize(build_prototypes(inputs.class_names, wv), settings.normalize);
  result.unresolved = protos.unresolved;
  const ZslDataset data = make_dataset(inputs.visual, protos);
  const auto grid = settings.grid.empty() ? default_grid(settings.model) : settings.grid;
  CvResult cv = cross_validate(data, settings.model, grid, settings.validation, settings.seed, settings.threads);
  result.report = evaluate(cv.model, data, settings.topk);
  result.report.validation_accuracy = cv.best_accuracy;
  result.model = std::move(cv.model);
  return result;
}

}  // namespace webzsl
