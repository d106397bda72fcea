#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "webzsl/taxonomy.hpp"

namespace webzsl {

// rankings[i] lists class indices best-first for sample i.
using Rankings = std::vector<std::vector<int>>;

// Fraction of samples whose true class is among the first k entries.
double topk_accuracy(const Rankings& rankings, const std::vector<int>& labels, std::size_t k);

struct PerClassAccuracy {
  std::map<int, double> per_class;  // classes with at least one sample
  std::vector<int> empty_classes;   // excluded, no samples
  double macro = 0.0;
};

PerClassAccuracy per_class_accuracy(const Rankings& rankings, const std::vector<int>& labels,
                                    int num_classes);

// Count of top-1 predictions at each hierarchy distance from the true class.
std::map<int, std::size_t> distance_histogram(const std::vector<std::string>& predicted,
                                              const std::vector<std::string>& truth,
                                              const Taxonomy& taxonomy);

struct ClassDifficulty {
  std::string class_id;
  int min_dist_to_seen = -1;  // -1 when no seen class is reachable
  int sibling_count = 0;
  int unseen_closer_count = 0;
  double accuracy = 0.0;
};

// Per unseen class: distance to the closest seen class, unseen classes sharing
// its parent, and unseen classes strictly closer than the closest seen class.
std::vector<ClassDifficulty> class_difficulty(const Taxonomy& taxonomy,
                                              const std::vector<std::string>& seen,
                                              const std::vector<std::string>& unseen,
                                              const std::map<std::string, double>& accuracy);

// Sample Pearson correlation. Throws on mismatched lengths, fewer than two
// points or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace webzsl
