#include "webzsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "webzsl/corpus.hpp"

namespace webzsl {

double topk_accuracy(const Rankings& rankings, const std::vector<int>& labels, std::size_t k) {
  if (k < 1) throw Error("k must be >= 1");
  if (rankings.size() != labels.size()) throw Error("rankings and labels differ in length");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i];
    const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.size()));
    if (std::find(r.begin(), end, labels[i]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

PerClassAccuracy per_class_accuracy(const Rankings& rankings, const std::vector<int>& labels,
                                    int num_classes) {
  if (rankings.size() != labels.size()) throw Error("rankings and labels differ in length");
  std::vector<std::size_t> total(static_cast<std::size_t>(num_classes), 0), hits(total);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= num_classes) throw Error("label out of range");
    ++total[static_cast<std::size_t>(c)];
    if (!rankings[i].empty() && rankings[i].front() == c) ++hits[static_cast<std::size_t>(c)];
  }
  PerClassAccuracy out;
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const auto n = total[static_cast<std::size_t>(c)];
    if (n == 0) {
      out.empty_classes.push_back(c);
      continue;
    }
    const double acc = static_cast<double>(hits[static_cast<std::size_t>(c)]) / static_cast<double>(n);
    out.per_class[c] = acc;
    sum += acc;
  }
  if (!out.per_class.empty()) out.macro = sum / static_cast<double>(out.per_class.size());
  return out;
}

std::map<int, std::size_t> distance_histogram(const std::vector<std::string>& predicted,
                                              const std::vector<std::string>& truth,
                                              const Taxonomy& taxonomy) {
  if (predicted.size() != truth.size()) throw Error("predictions and labels differ in length");
  std::map<int, std::size_t> hist;
  for (std::size_t i = 0; i < predicted.size(); ++i) ++hist[taxonomy.distance(predicted[i], truth[i])];
  return hist;
}

std::vector<ClassDifficulty> class_difficulty(const Taxonomy& taxonomy,
                                              const std::vector<std::string>& seen,
                                              const std::vector<std::string>& unseen,
                                              const std::map<std::string, double>& accuracy) {
  std::set<std::string> seen_set(seen.begin(), seen.end());
  for (const auto& u : unseen)
    if (seen_set.contains(u)) throw Error("class '" + u + "' is both seen and unseen");

  std::vector<int> seen_nodes, unseen_nodes;
  for (const auto& s : seen) seen_nodes.push_back(taxonomy.node(s));
  for (const auto& u : unseen) unseen_nodes.push_back(taxonomy.node(u));

  std::vector<ClassDifficulty> out;
  for (std::size_t i = 0; i < unseen.size(); ++i) {
    const int v = unseen_nodes[i];
    const auto dist = taxonomy.distances_from(v);
    ClassDifficulty d;
    d.class_id = unseen[i];
    int best = std::numeric_limits<int>::max();
    for (int s : seen_nodes) {
      const int ds = dist[static_cast<std::size_t>(s)];
      if (ds >= 0) best = std::min(best, ds);
    }
    d.min_dist_to_seen = best == std::numeric_limits<int>::max() ? -1 : best;

    const auto parent = taxonomy.parent(v);
    for (std::size_t j = 0; j < unseen.size(); ++j) {
      if (j == i) continue;
      const int u = unseen_nodes[j];
      if (parent && taxonomy.parent(u) == parent) ++d.sibling_count;
      const int du = dist[static_cast<std::size_t>(u)];
      if (du >= 0 && (d.min_dist_to_seen < 0 || du < d.min_dist_to_seen)) ++d.unseen_closer_count;
    }
    if (auto it = accuracy.find(unseen[i]); it != accuracy.end()) d.accuracy = it->second;
    out.push_back(std::move(d));
  }
  return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("pearson: inputs differ in length");
  if (xs.size() < 2) throw Error("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace webzsl
