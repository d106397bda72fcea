#include "webzsl/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "webzsl/corpus.hpp"

namespace webzsl {

Taxonomy Taxonomy::from_edges(const std::vector<Edge>& child_parent) {
  Taxonomy t;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = t.index_.try_emplace(id, static_cast<int>(t.ids_.size()));
    if (inserted) t.ids_.push_back(id);
    return it->second;
  };
  std::vector<std::vector<int>> parents;
  for (const auto& [child, parent] : child_parent) {
    if (child == parent) throw Error("taxonomy node '" + child + "' is its own parent");
    const int c = intern(child);
    const int p = intern(parent);
    parents.resize(t.ids_.size());
    auto& list = parents[static_cast<std::size_t>(c)];
    if (std::find(list.begin(), list.end(), p) == list.end()) list.push_back(p);
  }
  const std::size_t n = t.ids_.size();
  parents.resize(n);

  // Longest path to a root, iteratively to survive deep hierarchies.
  std::vector<int> height(n, -1);
  std::vector<char> state(n, 0);  // 0 new, 1 on stack, 2 done
  for (std::size_t start = 0; start < n; ++start) {
    if (state[start] == 2) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(start), 0}};
    state[start] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& ps = parents[static_cast<std::size_t>(v)];
      if (next < ps.size()) {
        const int p = ps[next++];
        if (state[static_cast<std::size_t>(p)] == 1)
          throw Error("taxonomy has a cycle through '" + t.ids_[static_cast<std::size_t>(p)] + "'");
        if (state[static_cast<std::size_t>(p)] == 0) {
          state[static_cast<std::size_t>(p)] = 1;
          stack.emplace_back(p, 0);
        }
        continue;
      }
      int h = 0;
      for (int p : ps) h = std::max(h, height[static_cast<std::size_t>(p)] + 1);
      height[static_cast<std::size_t>(v)] = h;
      state[static_cast<std::size_t>(v)] = 2;
      stack.pop_back();
    }
  }

  t.parent_.assign(n, -1);
  t.children_.assign(n, {});
  for (std::size_t v = 0; v < n; ++v) {
    int best = -1;
    for (int p : parents[v])
      if (best < 0 || height[static_cast<std::size_t>(p)] > height[static_cast<std::size_t>(best)]) best = p;
    t.parent_[v] = best;
    if (best >= 0) t.children_[static_cast<std::size_t>(best)].push_back(static_cast<int>(v));
  }
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read taxonomy: " + path.string());
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected child<TAB>parent");
    edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_edges(edges);
}

std::optional<int> Taxonomy::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Taxonomy::node(const std::string& id) const {
  auto n = find(id);
  if (!n) throw Error("class '" + id + "' is not in the taxonomy");
  return *n;
}

std::optional<int> Taxonomy::parent(int node) const {
  const int p = parent_[static_cast<std::size_t>(node)];
  if (p < 0) return std::nullopt;
  return p;
}

std::vector<int> Taxonomy::distances_from(int node) const {
  std::vector<int> dist(ids_.size(), -1);
  std::deque<int> queue{node};
  dist[static_cast<std::size_t>(node)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    auto visit = [&](int u) {
      if (dist[static_cast<std::size_t>(u)] >= 0) return;
      dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
      queue.push_back(u);
    };
    if (parent_[static_cast<std::size_t>(v)] >= 0) visit(parent_[static_cast<std::size_t>(v)]);
    for (int c : children_[static_cast<std::size_t>(v)]) visit(c);
  }
  return dist;
}

int Taxonomy::distance(const std::string& a, const std::string& b) const {
  const int from = node(a);
  const int to = node(b);
  if (from == to) return 0;
  const int d = distances_from(from)[static_cast<std::size_t>(to)];
  if (d < 0) throw Error("no path between '" + a + "' and '" + b + "' in the taxonomy");
  return d;
}

}  // namespace webzsl
