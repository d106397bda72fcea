#include "webzsl/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <ostream>
#include <random>

#include "webzsl/metrics.hpp"

namespace webzsl {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Eigen::MatrixXd keep_columns(const Eigen::MatrixXd& S, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(S.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = S.col(cols[j]);
  return normalize_rows(out);
}

}  // namespace

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  // shifted by the first value so identical inputs give exactly zero
  double sum = 0.0, sq = 0.0;
  for (double x : xs) {
    sum += x - xs.front();
    sq += (x - xs.front()) * (x - xs.front());
  }
  const auto n = static_cast<double>(xs.size());
  return std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1.0)));
}

std::vector<Eigen::Index> ablation_columns(Eigen::Index dim, std::size_t keep, std::uint64_t seed) {
  if (keep < 1 || static_cast<Eigen::Index>(keep) > dim)
    throw Error("attribute keep count must be in [1, " + std::to_string(dim) + "]");
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(dim));
  std::iota(cols.begin(), cols.end(), 0);
  if (static_cast<Eigen::Index>(keep) == dim) return cols;
  std::mt19937_64 rng(seed);
  std::shuffle(cols.begin(), cols.end(), rng);
  cols.resize(keep);
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::vector<AblationRow> attribute_ablation(const ZslDataset& data, const std::vector<std::size_t>& keep_counts,
                                            std::size_t runs, std::uint64_t seed,
                                            const AttributeAblationOptions& options) {
  data.validate();
  if (runs < 1) throw Error("attribute ablation needs at least one run");
  if (data.X_test.rows() == 0) throw Error("attribute ablation needs test samples");
  for (std::size_t k : keep_counts)
    if (k < 1 || static_cast<Eigen::Index>(k) > data.semantic_dim())
      throw Error("attribute keep count must be in [1, " + std::to_string(data.semantic_dim()) + "]");
  const auto grid = options.grid.empty() ? default_grid(ModelKind::linear_s2v) : options.grid;

  auto one_run = [&](std::size_t keep, std::size_t run) {
    const auto cols = ablation_columns(data.semantic_dim(), keep, seed + run);
    ZslDataset d = data;
    d.S_seen = keep_columns(data.S_seen, cols);
    d.S_unseen = keep_columns(data.S_unseen, cols);
    const CvResult cv = cross_validate(d, ModelKind::linear_s2v, grid, options.validation, seed);
    return topk_accuracy(rank_all(cv.model, d.X_test, d.S_unseen), d.y_test, 1);
  };

  std::vector<AblationRow> rows;
  for (std::size_t keep : keep_counts) {
    AblationRow row;
    row.keep = keep;
    row.accuracies.assign(runs, 0.0);
    if (options.threads <= 1) {
      for (std::size_t r = 0; r < runs; ++r) row.accuracies[r] = one_run(keep, r);
    } else {
      std::vector<std::future<double>> pending;
      std::size_t next = 0;
      while (next < runs) {
        const std::size_t first = next;
        for (; next < runs && next - first < static_cast<std::size_t>(options.threads); ++next)
          pending.push_back(std::async(std::launch::async, one_run, keep, next));
        for (std::size_t r = first; r < next; ++r) row.accuracies[r] = pending[r - first].get();
        pending.clear();
      }
    }
    row.mean = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) / static_cast<double>(runs);
    row.std = sample_std(row.accuracies);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "keep,mean,std\n";
  for (const auto& r : rows) out << r.keep << ',' << fixed(r.mean, 6) << ',' << fixed(r.std, 6) << '\n';
}

CorpusAblationTable corpus_ablation(const PipelineInputs& inputs, const PipelineSettings& settings,
                                    const std::vector<double>& fractions, const std::vector<ModelKind>& models) {
  if (models.empty()) throw Error("corpus ablation needs at least one model");
  CorpusAblationTable table;
  table.fractions.push_back(0.0);
  for (double f : fractions) {
    if (f < 0.0 || f >= 1.0) throw Error("removed fraction must lie in [0, 1)");
    if (f > 0.0) table.fractions.push_back(f);
  }
  std::sort(table.fractions.begin(), table.fractions.end());
  table.fractions.erase(std::unique(table.fractions.begin(), table.fractions.end()), table.fractions.end());
  for (ModelKind kind : models) {
    auto& row = table.top1[to_string(kind)];
    for (double f : table.fractions) {
      PipelineSettings s = settings;
      s.model = kind;
      s.ablate_fraction = f;
      s.grid.clear();
      if (kind == settings.model) s.grid = settings.grid;
      s.topk = {1};
      row.push_back(run_pipeline(inputs, s).report.topk.at(1));
    }
  }
  return table;
}

void write_corpus_ablation_csv(std::ostream& out, const CorpusAblationTable& table) {
  out << "model";
  for (double f : table.fractions) out << ',' << std::llround(f * 100.0) << '%';
  out << '\n';
  for (const auto& [model, accs] : table.top1) {
    out << model;
    for (double a : accs) out << ',' << fixed(a * 100.0, 2);
    out << '\n';
  }
}

}  // namespace webzsl
