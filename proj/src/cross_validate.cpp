#include <algorithm>
#include <future>
#include <numeric>
#include <random>
#include <unordered_map>

#include "webzsl/zsl.hpp"

namespace webzsl {

namespace {

std::vector<Hyperparameters> expand_grid(const std::map<std::string, std::vector<double>>& grid) {
  std::vector<Hyperparameters> points{{}};
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw Error("hyperparameter '" + name + "' has an empty grid");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<Hyperparameters> next;
    for (const auto& p : points)
      for (double v : sorted) {
        auto q = p;
        q[name] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

double top1(const ZslModel& model, const ZslDataset& split) {
  if (split.X_test.rows() == 0) return 0.0;
  const Eigen::MatrixXd scores = score_matrix(model, split.X_test, split.S_unseen);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    if (best == split.y_test[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

}  // namespace

std::vector<int> choose_validation_classes(const ZslDataset& data, const ValidationClasses& validation,
                                           std::uint64_t seed) {
  const auto seen = static_cast<int>(data.S_seen.rows());
  std::vector<int> chosen;
  if (const auto* count = std::get_if<std::size_t>(&validation)) {
    if (*count < 1 || static_cast<int>(*count) >= seen)
      throw Error("validation class count must be in [1, seen classes)");
    std::vector<int> all(static_cast<std::size_t>(seen));
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(*count));
  } else {
    const auto& ids = std::get<std::vector<std::string>>(validation);
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < data.seen_ids.size(); ++i) index.emplace(data.seen_ids[i], static_cast<int>(i));
    for (const auto& id : ids) {
      auto it = index.find(id);
      if (it == index.end()) throw Error("validation class '" + id + "' is not a seen class");
      chosen.push_back(it->second);
    }
    if (chosen.empty() || static_cast<int>(chosen.size()) >= seen)
      throw Error("validation class count must be in [1, seen classes)");
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  return chosen;
}

ZslDataset validation_split(const ZslDataset& data, const std::vector<int>& validation_classes) {
  const auto seen = static_cast<int>(data.S_seen.rows());
  std::vector<int> role(static_cast<std::size_t>(seen), -1);  // new index in its part
  std::vector<bool> is_val(static_cast<std::size_t>(seen), false);
  for (int c : validation_classes) is_val[static_cast<std::size_t>(c)] = true;

  ZslDataset split;
  std::vector<int> fit_classes;
  std::vector<int> val_classes;
  for (int c = 0; c < seen; ++c) {
    if (is_val[static_cast<std::size_t>(c)]) {
      role[static_cast<std::size_t>(c)] = static_cast<int>(val_classes.size());
      val_classes.push_back(c);
    } else {
      role[static_cast<std::size_t>(c)] = static_cast<int>(fit_classes.size());
      fit_classes.push_back(c);
    }
  }
  auto gather = [&](const std::vector<int>& classes, Eigen::MatrixXd& S, std::vector<std::string>& ids) {
    S.resize(static_cast<Eigen::Index>(classes.size()), data.S_seen.cols());
    for (std::size_t i = 0; i < classes.size(); ++i) {
      S.row(static_cast<Eigen::Index>(i)) = data.S_seen.row(classes[i]);
      if (!data.seen_ids.empty()) ids.push_back(data.seen_ids[static_cast<std::size_t>(classes[i])]);
    }
  };
  gather(fit_classes, split.S_seen, split.seen_ids);
  gather(val_classes, split.S_unseen, split.unseen_ids);

  std::vector<Eigen::Index> fit_rows, val_rows;
  for (std::size_t i = 0; i < data.y.size(); ++i)
    (is_val[static_cast<std::size_t>(data.y[i])] ? val_rows : fit_rows).push_back(static_cast<Eigen::Index>(i));
  split.X.resize(static_cast<Eigen::Index>(fit_rows.size()), data.X.cols());
  split.X_test.resize(static_cast<Eigen::Index>(val_rows.size()), data.X.cols());
  for (std::size_t i = 0; i < fit_rows.size(); ++i) {
    split.X.row(static_cast<Eigen::Index>(i)) = data.X.row(fit_rows[i]);
    split.y.push_back(role[static_cast<std::size_t>(data.y[static_cast<std::size_t>(fit_rows[i])])]);
  }
  for (std::size_t i = 0; i < val_rows.size(); ++i) {
    split.X_test.row(static_cast<Eigen::Index>(i)) = data.X.row(val_rows[i]);
    split.y_test.push_back(role[static_cast<std::size_t>(data.y[static_cast<std::size_t>(val_rows[i])])]);
  }
  return split;
}

CvResult cross_validate(const ZslDataset& data, ModelKind kind,
                        const std::map<std::string, std::vector<double>>& grid,
                        const ValidationClasses& validation, std::uint64_t seed, int threads) {
  data.validate();
  if (grid.empty()) throw Error("empty hyperparameter grid");
  const auto points = expand_grid(grid);
  const auto val = choose_validation_classes(data, validation, seed);
  const ZslDataset split = validation_split(data, val);
  if (split.X.rows() == 0) throw Error("no training samples left after the validation split");

  CvResult result;
  for (int c : val) result.validation_classes.push_back(
      data.seen_ids.empty() ? std::to_string(c) : data.seen_ids[static_cast<std::size_t>(c)]);

  std::vector<double> acc(points.size(), 0.0);
  auto evaluate = [&](std::size_t i) { acc[i] = top1(fit_model(split, kind, points[i], seed), split); };
  if (threads <= 1 || points.size() == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) evaluate(i);
  } else {
    std::vector<std::future<void>> pending;
    for (std::size_t i = 0; i < points.size(); ++i) {
      pending.push_back(std::async(std::launch::async, evaluate, i));
      if (pending.size() == static_cast<std::size_t>(threads)) {
        for (auto& f : pending) f.get();
        pending.clear();
      }
    }
    for (auto& f : pending) f.get();
  }

  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    result.table.emplace_back(points[i], acc[i]);
    if (acc[i] > acc[best]) best = i;
  }
  result.best = points[best];
  result.best_accuracy = acc[best];
  result.model = fit_model(data, kind, result.best, seed);
  return result;
}

}  // namespace webzsl
