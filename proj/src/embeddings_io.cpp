#include "webzsl/embeddings_io.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace webzsl {

std::optional<std::size_t> WordVectors::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WordVectors::rebuild_index() {
  index_.clear();
  index_.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i)
    if (!index_.emplace(words[i], i).second) throw Error("duplicate row key: " + words[i]);
}

std::optional<Eigen::VectorXf> WordVectors::compose_subwords(const std::string& word) const {
  if (!subwords) return std::nullopt;
  const auto& cfg = subwords->config;
  Eigen::VectorXf acc = Eigen::VectorXf::Zero(dim());
  int n = 0;
  for (auto b : subword_ngrams(word, cfg.minn, cfg.maxn, cfg.buckets)) {
    auto it = subwords->rows.find(b);
    if (it == subwords->rows.end()) continue;
    acc += it->second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return Eigen::VectorXf(acc / static_cast<float>(n));
}

WordVectors make_word_vectors(const EmbeddingMatrix& m, const Vocabulary& vocab) {
  WordVectors wv;
  wv.words = vocab.words();
  wv.vectors = word_vectors(m, vocab);
  if (m.subword) {
    SubwordTable table{*m.subword, {}};
    const auto v = static_cast<Eigen::Index>(vocab.size());
    for (const auto& w : vocab.words())
      for (auto b : subword_ngrams(w, m.subword->minn, m.subword->maxn, m.subword->buckets))
        if (!table.rows.contains(b)) table.rows.emplace(b, m.input.row(v + b).transpose());
    wv.subwords = std::move(table);
  }
  wv.rebuild_index();
  return wv;
}

void write_word2vec(std::ostream& out, const WordVectors& wv) {
  out << wv.vectors.rows() << ' ' << wv.vectors.cols() << '\n';
  out.precision(std::numeric_limits<float>::max_digits10);
  for (Eigen::Index i = 0; i < wv.vectors.rows(); ++i) {
    out << wv.words[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < wv.vectors.cols(); ++k) out << ' ' << wv.vectors(i, k);
    out << '\n';
  }
}

WordVectors read_word2vec(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty embedding file");
  std::istringstream hs(line);
  long long rows = -1, cols = -1;
  if (!(hs >> rows >> cols) || rows < 0 || cols < 1)
    throw Error("bad embedding header: '" + line + "'");

  WordVectors wv;
  wv.vectors.resize(rows, cols);
  wv.words.reserve(static_cast<std::size_t>(rows));
  long long r = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (r >= rows) throw Error("embedding file has more rows than its header declares");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    long long k = 0;
    float v = 0.0f;
    while (ls >> v) {
      if (k >= cols) throw Error("row '" + word + "' has more than " + std::to_string(cols) + " values");
      wv.vectors(r, k++) = v;
    }
    if (!ls.eof()) throw Error("non-numeric value in row '" + word + "'");
    if (k != cols)
      throw Error("row '" + word + "' has " + std::to_string(k) + " values, expected " +
                  std::to_string(cols));
    wv.words.push_back(std::move(word));
    ++r;
  }
  if (r != rows)
    throw Error("embedding file has " + std::to_string(r) + " rows, header declares " +
                std::to_string(rows));
  wv.rebuild_index();
  return wv;
}

void save_embeddings(const std::filesystem::path& path, const WordVectors& wv) {
  {
    std::ofstream out(path);
    if (!out) throw Error("cannot write embeddings: " + path.string());
    write_word2vec(out, wv);
  }
  auto sidecar = path;
  sidecar += ".subword";
  if (!wv.subwords) {
    std::error_code ec;
    std::filesystem::remove(sidecar, ec);
    return;
  }
  std::ofstream out(sidecar);
  if (!out) throw Error("cannot write subword table: " + sidecar.string());
  const auto& cfg = wv.subwords->config;
  out << cfg.minn << ' ' << cfg.maxn << ' ' << cfg.buckets << ' ' << wv.subwords->rows.size()
      << ' ' << wv.dim() << '\n';
  out.precision(std::numeric_limits<float>::max_digits10);
  std::set<std::uint32_t> order;
  for (const auto& [b, _] : wv.subwords->rows) order.insert(b);
  for (auto b : order) {
    out << b;
    const auto& row = wv.subwords->rows.at(b);
    for (Eigen::Index k = 0; k < row.size(); ++k) out << ' ' << row[k];
    out << '\n';
  }
}

WordVectors load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read embeddings: " + path.string());
  WordVectors wv = read_word2vec(in);

  auto sidecar = path;
  sidecar += ".subword";
  std::ifstream sin(sidecar);
  if (!sin) return wv;
  SubwordTable table;
  std::size_t count = 0;
  int dim = 0;
  if (!(sin >> table.config.minn >> table.config.maxn >> table.config.buckets >> count >> dim) ||
      dim != wv.dim())
    throw Error("bad subword table header: " + sidecar.string());
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t b = 0;
    Eigen::VectorXf row(dim);
    if (!(sin >> b)) throw Error("truncated subword table: " + sidecar.string());
    for (int k = 0; k < dim; ++k)
      if (!(sin >> row[k])) throw Error("truncated subword table: " + sidecar.string());
    table.rows.emplace(b, std::move(row));
  }
  wv.subwords = std::move(table);
  return wv;
}

}  // namespace webzsl
