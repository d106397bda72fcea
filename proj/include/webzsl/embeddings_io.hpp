#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "webzsl/sgns.hpp"

namespace webzsl {

// Trained bucket rows, keyed by bucket index. Only buckets reachable from the
// training vocabulary are kept; the rest were never updated.
struct SubwordTable {
  SubwordConfig config;
  std::unordered_map<std::uint32_t, Eigen::VectorXf> rows;
};

// Keyed dense vectors: word vectors, or class prototypes keyed by class id.
struct WordVectors {
  std::vector<std::string> words;
  RowMatrix<float> vectors;
  std::optional<SubwordTable> subwords;

  std::size_t size() const { return words.size(); }
  int dim() const { return static_cast<int>(vectors.cols()); }
  std::optional<std::size_t> find(const std::string& word) const;
  // Mean of the word's known n-gram rows, if any.
  std::optional<Eigen::VectorXf> compose_subwords(const std::string& word) const;

  void rebuild_index();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

WordVectors make_word_vectors(const EmbeddingMatrix& m, const Vocabulary& vocab);

// word2vec text format: "V K" header, then "word v1 ... vK" per line.
// A subword table, when present, goes to a "<path>.subword" sidecar.
void save_embeddings(const std::filesystem::path& path, const WordVectors& wv);
WordVectors load_embeddings(const std::filesystem::path& path);

void write_word2vec(std::ostream& out, const WordVectors& wv);
WordVectors read_word2vec(std::istream& in);

}  // namespace webzsl
