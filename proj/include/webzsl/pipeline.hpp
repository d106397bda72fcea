#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "webzsl/corpus.hpp"
#include "webzsl/pairs.hpp"
#include "webzsl/prototypes.hpp"
#include "webzsl/sgns.hpp"
#include "webzsl/zsl.hpp"

namespace webzsl {

// Visual side of a ZSL benchmark, labels given as class ids.
struct VisualData {
  Eigen::MatrixXd X_train;
  std::vector<std::string> train_labels;
  Eigen::MatrixXd X_test;
  std::vector<std::string> test_labels;
  std::vector<std::string> seen_ids;
  std::vector<std::string> unseen_ids;
};

struct VisualFiles {
  std::filesystem::path train_features;
  std::filesystem::path train_labels;
  std::filesystem::path test_features;
  std::filesystem::path test_labels;
  std::filesystem::path seen;
  std::filesystem::path unseen;

  // The layout written by save_synth_visual.
  static VisualFiles in_directory(const std::filesystem::path& dir);
};

VisualData load_visual(const VisualFiles& files);

// Joins features with prototypes; throws on labels outside the split.
ZslDataset make_dataset(const VisualData& visual, const PrototypeSet& protos);

struct EvalReport {
  std::size_t samples = 0;
  std::map<std::size_t, double> topk;  // k -> per-sample accuracy
  double macro_top1 = 0.0;             // mean of per-class top-1
  std::vector<std::string> empty_classes;
  Hyperparameters hyper;
  std::optional<double> validation_accuracy;
};

EvalReport evaluate(const ZslModel& model, const ZslDataset& data, const std::vector<std::size_t>& ks);

// "metric,value" rows; values with six decimals.
void write_metrics_csv(std::ostream& out, const EvalReport& report);
void save_metrics_csv(const std::filesystem::path& path, const EvalReport& report);

// Per test sample: true id followed by the top `depth` predicted ids.
void save_predictions(const std::filesystem::path& path, const ZslModel& model, const ZslDataset& data,
                      std::size_t depth);

struct PipelineSettings {
  std::uint64_t min_count = 5;
  PairMode mode = PairMode::voted;
  double ablate_fraction = 0.0;
  std::uint64_t seed = 1;
  TrainerConfig trainer;
  bool normalize = true;
  ModelKind model = ModelKind::linear_s2v;
  std::map<std::string, std::vector<double>> grid;  // empty: default_grid(model)
  ValidationClasses validation = std::size_t{3};
  int threads = 1;
  std::vector<std::size_t> topk{1, 5, 10};
  VoteOptions vote;
};

struct PipelineInputs {
  std::vector<ConceptCollection> corpus;
  std::vector<ClassNameEntry> class_names;
  VisualData visual;
};

struct PipelineResult {
  EvalReport report;
  std::size_t pieces = 0;
  std::size_t vocab_size = 0;
  std::size_t pairs = 0;
  std::vector<std::string> unresolved;
  ZslModel model;
};

// ablate -> vocabulary -> pairs -> train -> prototypes -> cross-validated fit
// -> evaluation on the unseen classes. The seed drives every stage.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineSettings& settings);

}  // namespace webzsl
