#include "webzsl/prototypes.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace webzsl {

namespace {

std::optional<Eigen::VectorXd> token_vector(const std::string& token, const WordVectors& wv) {
  if (auto i = wv.find(token)) return wv.vectors.row(static_cast<Eigen::Index>(*i)).transpose().cast<double>();
  if (auto v = wv.compose_subwords(token)) return v->cast<double>();
  return std::nullopt;
}

}  // namespace

PrototypeSet PrototypeSet::select(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < class_ids.size(); ++i) row.emplace(class_ids[i], static_cast<Eigen::Index>(i));
  PrototypeSet out;
  out.normalized = normalized;
  out.class_ids = ids;
  out.matrix.resize(static_cast<Eigen::Index>(ids.size()), matrix.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = row.find(ids[i]);
    if (it == row.end()) throw Error("no prototype for class '" + ids[i] + "'");
    out.matrix.row(static_cast<Eigen::Index>(i)) = matrix.row(it->second);
  }
  return out;
}

std::vector<ClassNameEntry> load_class_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read class-name file: " + path.string());
  std::vector<ClassNameEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected class_id<TAB>variants");
    ClassNameEntry e{line.substr(0, tab), {}};
    std::istringstream vs(line.substr(tab + 1));
    std::string v;
    while (std::getline(vs, v, '|'))
      if (v.find_first_not_of(" \t") != std::string::npos) e.variants.push_back(v);
    if (e.variants.empty())
      throw Error(path.string() + ":" + std::to_string(lineno) + ": class has no name variant");
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_class_names(const std::filesystem::path& path,
                      const std::vector<ClassNameEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write class-name file: " + path.string());
  for (const auto& e : entries) {
    out << e.class_id << '\t';
    for (std::size_t i = 0; i < e.variants.size(); ++i) out << (i ? "|" : "") << e.variants[i];
    out << '\n';
  }
}

std::optional<Eigen::VectorXd> variant_vector(const std::string& variant, const WordVectors& wv) {
  const auto tokens = tokenize(variant, {}, {});
  if (tokens.empty()) return std::nullopt;

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(wv.dim());
  std::size_t resolved = 0;
  for (const auto& t : tokens) {
    if (auto v = token_vector(t, wv)) {
      sum += *v;
      ++resolved;
    }
  }
  if (resolved == tokens.size()) return Eigen::VectorXd(sum / static_cast<double>(resolved));

  if (tokens.size() > 1) {
    std::string joined;
    for (const auto& t : tokens) joined += t;
    if (auto v = token_vector(joined, wv)) return v;
  }
  if (resolved == 0) return std::nullopt;
  return Eigen::VectorXd(sum / static_cast<double>(resolved));
}

PrototypeSet build_prototypes(const std::vector<ClassNameEntry>& entries, const WordVectors& wv) {
  PrototypeSet out;
  out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()), wv.dim());
  for (std::size_t c = 0; c < entries.size(); ++c) {
    const auto& e = entries[c];
    out.class_ids.push_back(e.class_id);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(wv.dim());
    int n = 0;
    for (const auto& variant : e.variants) {
      if (auto v = variant_vector(variant, wv)) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0)
      out.unresolved.push_back(e.class_id);
    else
      out.matrix.row(static_cast<Eigen::Index>(c)) = sum.transpose() / n;
  }
  if (!entries.empty() && out.unresolved.size() == entries.size())
    throw Error("no class name could be resolved against the embeddings");
  return out;
}

PrototypeSet normalize(PrototypeSet protos, bool enable) {
  if (!enable) return protos;
  protos.zero_rows.clear();
  for (Eigen::Index i = 0; i < protos.matrix.rows(); ++i) {
    const double n = protos.matrix.row(i).norm();
    if (n > 0.0)
      protos.matrix.row(i) /= n;
    else
      protos.zero_rows.push_back(protos.class_ids[static_cast<std::size_t>(i)]);
  }
  protos.normalized = true;
  return protos;
}

void save_prototypes(const std::filesystem::path& path, const PrototypeSet& protos) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write prototypes: " + path.string());
  out << protos.matrix.rows() << ' ' << protos.matrix.cols() << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < protos.matrix.rows(); ++i) {
    out << protos.class_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < protos.matrix.cols(); ++k) out << ' ' << protos.matrix(i, k);
    out << '\n';
  }
}

PrototypeSet load_prototypes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read prototypes: " + path.string());
  long long rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 1) throw Error("bad prototype header: " + path.string());
  PrototypeSet p;
  p.matrix.resize(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    std::string id;
    if (!(in >> id)) throw Error("prototype file ends early: " + path.string());
    p.class_ids.push_back(id);
    for (long long k = 0; k < cols; ++k)
      if (!(in >> p.matrix(i, k))) throw Error("bad prototype row '" + id + "' in " + path.string());
  }
  return p;
}

}  // namespace webzsl
