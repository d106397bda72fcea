#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace webzsl {

// Class hierarchy reduced to a forest: a node listed with several parents
// keeps the one on the longest path to a root (first listed wins ties).
class Taxonomy {
 public:
  using Edge = std::pair<std::string, std::string>;  // child, parent

  static Taxonomy from_edges(const std::vector<Edge>& child_parent);
  // TSV "child_id<TAB>parent_id".
  static Taxonomy load(const std::filesystem::path& path);

  std::size_t size() const { return ids_.size(); }
  const std::string& id(int node) const { return ids_[static_cast<std::size_t>(node)]; }
  std::optional<int> find(const std::string& id) const;
  int node(const std::string& id) const;  // throws when absent
  std::optional<int> parent(int node) const;
  const std::vector<int>& children(int node) const { return children_[static_cast<std::size_t>(node)]; }

  // Undirected BFS distances from `node` to every node; -1 where unreachable.
  std::vector<int> distances_from(int node) const;
  // Shortest undirected path length. Throws for an unknown or unreachable pair.
  int distance(const std::string& a, const std::string& b) const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
};

}  // namespace webzsl
