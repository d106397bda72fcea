#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "webzsl/pipeline.hpp"
#include "webzsl/zsl.hpp"

namespace webzsl {

struct AblationRow {
  std::size_t keep = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
  std::vector<double> accuracies;
};

struct AttributeAblationOptions {
  std::map<std::string, std::vector<double>> grid;  // empty: default linear_s2v grid
  ValidationClasses validation = std::size_t{3};
  int threads = 1;
};

// Keeps a random subset of `keep` prototype columns (sorted), re-normalizes
// the rows, cross-validates and fits linear_s2v, and records unseen top-1.
// Run r draws its subset with seed + r; the validation split always uses seed.
std::vector<AblationRow> attribute_ablation(const ZslDataset& data, const std::vector<std::size_t>& keep_counts,
                                            std::size_t runs, std::uint64_t seed,
                                            const AttributeAblationOptions& options = {});

// Columns kept by one ablation run.
std::vector<Eigen::Index> ablation_columns(Eigen::Index dim, std::size_t keep, std::uint64_t seed);

// "keep,mean,std" (plot data: x,y,std).
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

struct CorpusAblationTable {
  std::vector<double> fractions;  // 0 first
  std::map<std::string, std::vector<double>> top1;  // model -> per fraction
};

// Full pipeline per (model, removed fraction). Fraction 0 is always included.
CorpusAblationTable corpus_ablation(const PipelineInputs& inputs, const PipelineSettings& settings,
                                    const std::vector<double>& fractions, const std::vector<ModelKind>& models);

// "model,0%,50%,..." with accuracies in percent.
void write_corpus_ablation_csv(std::ostream& out, const CorpusAblationTable& table);

double sample_std(const std::vector<double>& xs);

}  // namespace webzsl
