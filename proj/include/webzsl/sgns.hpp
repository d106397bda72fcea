#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "webzsl/corpus.hpp"
#include "webzsl/pairs.hpp"

namespace webzsl {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SubwordConfig {
  int minn = 4;
  int maxn = 6;
  std::uint32_t buckets = 2'000'000;
};

// Defaults follow the published word2vec / fastText invocations
// (-size 300 -sample 1e-4 -negative 5 -iter 25 -min-count 5, lr 0.1).
struct TrainerConfig {
  int epochs = 25;
  double lr0 = 0.1;
  int negatives = 5;
  double sample = 1e-4;  // <= 0 disables subsampling
  int dim = 300;
  std::uint64_t min_count = 5;
  std::optional<SubwordConfig> subword;
  std::uint64_t seed = 1;
  bool deterministic = true;
  int threads = 1;

  void validate() const;
};

// Input rows: one per vocabulary word, followed by subword bucket rows when
// subwords are enabled. Output rows: one per vocabulary word.
struct EmbeddingMatrix {
  RowMatrix<float> input;
  RowMatrix<float> output;
  std::optional<SubwordConfig> subword;

  int dim() const { return static_cast<int>(output.cols()); }
  std::size_t vocab_size() const { return static_cast<std::size_t>(output.rows()); }
};

// Input rows uniform in [-0.5/K, 0.5/K], output rows zero.
EmbeddingMatrix init_embeddings(std::size_t vocab_size, const TrainerConfig& config);
inline EmbeddingMatrix init_embeddings(const Vocabulary& vocab, const TrainerConfig& config) {
  return init_embeddings(vocab.size(), config);
}

template <typename Scalar>
Scalar log_sigmoid(Scalar z) {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
struct PairGradient {
  Scalar loss = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> center;   // d loss / d v_center
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> context;  // d loss / d v'_context
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> negatives;  // row n: d loss / d v'_n
};

// Negative-sampling loss of one (center, context) example:
//   -log s(v'_ctx . v_c) - sum_n log s(-v'_n . v_c)
// `negatives` holds one output vector per row.
template <typename CenterT, typename ContextT, typename NegT, typename Scalar>
void pair_loss_grad(const Eigen::MatrixBase<CenterT>& center,
                    const Eigen::MatrixBase<ContextT>& context,
                    const Eigen::MatrixBase<NegT>& negatives, PairGradient<Scalar>& out) {
  const Eigen::Index k = center.size();
  const Scalar pos = context.dot(center);
  const Scalar g_pos = sigmoid(pos) - Scalar(1);  // d/dpos of -log s(pos)

  out.loss = -log_sigmoid(pos);
  out.center = g_pos * context;
  out.context = g_pos * center;
  out.negatives.resize(negatives.rows(), k);
  for (Eigen::Index n = 0; n < negatives.rows(); ++n) {
    const Scalar z = negatives.row(n).dot(center);
    const Scalar g = sigmoid(z);  // d/dz of -log s(-z)
    out.loss -= log_sigmoid(-z);
    out.center.noalias() += g * negatives.row(n).transpose();
    out.negatives.row(n) = g * center.transpose();
  }
}

template <typename CenterT, typename ContextT, typename NegT>
auto pair_loss_grad(const Eigen::MatrixBase<CenterT>& center,
                    const Eigen::MatrixBase<ContextT>& context,
                    const Eigen::MatrixBase<NegT>& negatives) {
  PairGradient<typename CenterT::Scalar> out;
  pair_loss_grad(center, context, negatives, out);
  return out;
}

// Index form over a trained or initialized matrix (center = raw input row).
PairGradient<float> pair_loss_grad(std::uint32_t center, std::uint32_t context,
                                   std::span<const std::uint32_t> negatives,
                                   const EmbeddingMatrix& m);

// Sampling distribution proportional to count^0.75.
class NegativeTable {
 public:
  explicit NegativeTable(std::span<const std::uint64_t> counts, double power = 0.75);

  template <typename Rng>
  std::uint32_t sample(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return index_of(u);
  }
  double probability(std::size_t i) const { return probs_[i]; }
  std::size_t size() const { return probs_.size(); }

 private:
  std::uint32_t index_of(double u) const;

  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

// word2vec keep probability (sqrt(f/(s*T)) + 1) * (s*T/f), capped at 1.
double keep_probability(std::uint64_t count, std::uint64_t total, double sample);

template <typename Rng>
bool subsample_keep(std::uint32_t word, const Vocabulary& vocab, double sample, Rng& rng) {
  const double p = keep_probability(vocab.count(word), vocab.total_count(), sample);
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Character n-grams of "<word>" for n in [minn, maxn], counted in code points.
std::vector<std::string> char_ngrams(std::string_view word, int minn, int maxn);

std::uint32_t fnv1a32(std::string_view bytes);

std::vector<std::uint32_t> subword_ngrams(std::string_view word, int minn, int maxn,
                                          std::uint32_t buckets);

struct TrainStats {
  std::vector<double> epoch_loss;  // mean loss per directed example
  std::uint64_t examples = 0;
  std::uint64_t subsampled = 0;
};

// Each canonical pair trains both directions. Learning rate decays linearly
// from lr0 to lr0 * 1e-4. Negative sampling and subsampling use the word
// frequencies of the pair stream itself.
EmbeddingMatrix train(std::span<const TrainingPair> pairs, const Vocabulary& vocab,
                      const TrainerConfig& config, TrainStats* stats = nullptr);
EmbeddingMatrix train(const std::filesystem::path& pair_file, const Vocabulary& vocab,
                      const TrainerConfig& config, TrainStats* stats = nullptr);

// Occurrences of each word in the pair stream (both sides).
std::vector<std::uint64_t> pair_frequencies(std::span<const TrainingPair> pairs,
                                            std::size_t vocab_size);

// Final word vector of every vocabulary word: the input row, averaged with the
// word's subword rows when subwords are enabled.
RowMatrix<float> word_vectors(const EmbeddingMatrix& m, const Vocabulary& vocab);

using CooccurrenceMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Symmetric pair-occurrence counts.
CooccurrenceMatrix cooccurrence(std::span<const TrainingPair> pairs, std::size_t vocab_size);
// Text lines "i j count", both triangles, row-major order.
void save_cooccurrence(const std::filesystem::path& path, const CooccurrenceMatrix& counts);
CooccurrenceMatrix export_cooccurrence(const std::filesystem::path& pair_file,
                                       const Vocabulary& vocab,
                                       const std::filesystem::path& out_file);

}  // namespace webzsl
