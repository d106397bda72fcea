#include "webzsl/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

namespace webzsl {

void TrainerConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (!(lr0 > 0.0)) throw Error("learning rate must be > 0");
  if (negatives < 1) throw Error("negatives must be >= 1");
  if (dim < 1) throw Error("dim must be >= 1");
  if (min_count < 1) throw Error("min-count must be >= 1");
  if (threads < 1) throw Error("threads must be >= 1");
  if (subword) {
    if (subword->minn < 1 || subword->minn > subword->maxn)
      throw Error("subword n-gram range must satisfy 1 <= minn <= maxn");
    if (subword->buckets < 1) throw Error("subword bucket count must be >= 1");
  }
}

EmbeddingMatrix init_embeddings(std::size_t vocab_size, const TrainerConfig& config) {
  const auto k = static_cast<Eigen::Index>(config.dim);
  const auto words = static_cast<Eigen::Index>(vocab_size);
  const Eigen::Index extra = config.subword ? config.subword->buckets : 0;

  EmbeddingMatrix m;
  m.subword = config.subword;
  m.input.resize(words + extra, k);
  m.output = RowMatrix<float>::Zero(words, k);

  std::mt19937_64 rng(config.seed);
  const float bound = 0.5f / static_cast<float>(k);
  std::uniform_real_distribution<float> uni(-bound, bound);
  float* p = m.input.data();
  for (Eigen::Index i = 0; i < m.input.size(); ++i) p[i] = uni(rng);
  return m;
}

PairGradient<float> pair_loss_grad(std::uint32_t center, std::uint32_t context,
                                   std::span<const std::uint32_t> negatives,
                                   const EmbeddingMatrix& m) {
  Eigen::MatrixXf negs(static_cast<Eigen::Index>(negatives.size()), m.dim());
  for (std::size_t n = 0; n < negatives.size(); ++n)
    negs.row(static_cast<Eigen::Index>(n)) = m.output.row(negatives[n]);
  return pair_loss_grad(m.input.row(center).transpose(), m.output.row(context).transpose(),
                        negs);
}

NegativeTable::NegativeTable(std::span<const std::uint64_t> counts, double power) {
  if (counts.empty()) throw Error("negative table needs a non-empty vocabulary");
  probs_.resize(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    probs_[i] = std::pow(static_cast<double>(std::max<std::uint64_t>(counts[i], 1)), power);
    total += probs_[i];
  }
  cumulative_.resize(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    probs_[i] /= total;
    acc += probs_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

std::uint32_t NegativeTable::index_of(double u) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::uint32_t>(it - cumulative_.begin());
}

double keep_probability(std::uint64_t count, std::uint64_t total, double sample) {
  if (sample <= 0.0 || count == 0 || total == 0) return 1.0;
  const double threshold = sample * static_cast<double>(total);
  const double f = static_cast<double>(count);
  return std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f);
}

std::vector<std::string> char_ngrams(std::string_view word, int minn, int maxn) {
  const std::string marked = "<" + std::string(word) + ">";
  // Byte offsets of code point starts, plus the end.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < marked.size(); ++i)
    if ((static_cast<unsigned char>(marked[i]) & 0xC0) != 0x80) starts.push_back(i);
  starts.push_back(marked.size());
  const int chars = static_cast<int>(starts.size()) - 1;

  std::vector<std::string> grams;
  for (int n = minn; n <= maxn; ++n)
    for (int s = 0; s + n <= chars; ++s)
      grams.push_back(marked.substr(starts[s], starts[s + n] - starts[s]));
  return grams;
}

std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::vector<std::uint32_t> subword_ngrams(std::string_view word, int minn, int maxn,
                                          std::uint32_t buckets) {
  std::vector<std::uint32_t> ids;
  for (const auto& g : char_ngrams(word, minn, maxn)) ids.push_back(fnv1a32(g) % buckets);
  return ids;
}

std::vector<std::uint64_t> pair_frequencies(std::span<const TrainingPair> pairs,
                                            std::size_t vocab_size) {
  std::vector<std::uint64_t> freq(vocab_size, 0);
  for (const auto& p : pairs) {
    if (p.left >= vocab_size || p.right >= vocab_size)
      throw Error("pair index outside the vocabulary");
    ++freq[p.left];
    ++freq[p.right];
  }
  return freq;
}

namespace {

float relaxed_load(float& x) {
  return std::atomic_ref<float>(x).load(std::memory_order_relaxed);
}

void relaxed_sub(float& x, float delta) {
  // Not a read-modify-write: concurrent updates to the same cell may be lost.
  std::atomic_ref<float> ref(x);
  ref.store(ref.load(std::memory_order_relaxed) - delta, std::memory_order_relaxed);
}

std::vector<std::vector<std::uint32_t>> input_rows(const Vocabulary& vocab,
                                                   const std::optional<SubwordConfig>& sw) {
  std::vector<std::vector<std::uint32_t>> rows(vocab.size());
  const auto v = static_cast<std::uint32_t>(vocab.size());
  for (std::uint32_t i = 0; i < v; ++i) {
    rows[i].push_back(i);
    if (sw)
      for (auto b : subword_ngrams(vocab.word(i), sw->minn, sw->maxn, sw->buckets))
        rows[i].push_back(v + b);
  }
  return rows;
}

struct TrainingState {
  std::span<const TrainingPair> pairs;
  const TrainerConfig& config;
  const NegativeTable& negatives;
  const std::vector<double>& keep;
  const std::vector<std::vector<std::uint32_t>>& rows;
  EmbeddingMatrix& m;
  std::uint64_t total_steps;
  std::atomic<std::uint64_t> progress{0};
};

class Worker {
 public:
  Worker(TrainingState& state, std::uint64_t seed)
      : s_(state), rng_(seed), dim_(state.m.dim()), hidden_(dim_), context_(dim_) {
    epoch_loss_.assign(static_cast<std::size_t>(state.config.epochs), 0.0);
    epoch_examples_.assign(epoch_loss_.size(), 0);
  }

  void run(std::size_t begin, std::size_t end) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double lr0 = s_.config.lr0;
    for (int epoch = 0; epoch < s_.config.epochs; ++epoch) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto done = s_.progress.fetch_add(1, std::memory_order_relaxed);
        const double frac = static_cast<double>(done) / static_cast<double>(s_.total_steps);
        const auto lr = static_cast<float>(lr0 * std::max(1e-4, 1.0 - frac));
        const TrainingPair& p = s_.pairs[i];
        if (!kept(p.left, uni) || !kept(p.right, uni)) {
          ++subsampled_;
          continue;
        }
        epoch_loss_[epoch] += example(p.left, p.right, lr);
        epoch_loss_[epoch] += example(p.right, p.left, lr);
        epoch_examples_[epoch] += 2;
      }
    }
  }

  std::vector<double> epoch_loss_;
  std::vector<std::uint64_t> epoch_examples_;
  std::uint64_t subsampled_ = 0;

 private:
  bool kept(std::uint32_t w, std::uniform_real_distribution<double>& uni) {
    const double p = s_.keep[w];
    return p >= 1.0 || uni(rng_) < p;
  }

  float example(std::uint32_t center, std::uint32_t context, float lr) {
    float* in = s_.m.input.data();
    float* out = s_.m.output.data();
    const auto& rows = s_.rows[center];

    hidden_.setZero();
    for (auto r : rows)
      for (int k = 0; k < dim_; ++k) hidden_[k] += relaxed_load(in[std::size_t(r) * dim_ + k]);
    hidden_ /= static_cast<float>(rows.size());

    for (int k = 0; k < dim_; ++k) context_[k] = relaxed_load(out[std::size_t(context) * dim_ + k]);

    neg_ids_.clear();
    for (int n = 0; n < s_.config.negatives; ++n) {
      const auto t = s_.negatives.sample(rng_);
      if (t != context) neg_ids_.push_back(t);
    }
    negs_.resize(static_cast<Eigen::Index>(neg_ids_.size()), dim_);
    for (std::size_t n = 0; n < neg_ids_.size(); ++n)
      for (int k = 0; k < dim_; ++k)
        negs_(static_cast<Eigen::Index>(n), k) = relaxed_load(out[std::size_t(neg_ids_[n]) * dim_ + k]);

    pair_loss_grad(hidden_, context_, negs_, grad_);

    for (int k = 0; k < dim_; ++k) relaxed_sub(out[std::size_t(context) * dim_ + k], lr * grad_.context[k]);
    for (std::size_t n = 0; n < neg_ids_.size(); ++n)
      for (int k = 0; k < dim_; ++k)
        relaxed_sub(out[std::size_t(neg_ids_[n]) * dim_ + k],
                    lr * grad_.negatives(static_cast<Eigen::Index>(n), k));
    // fastText convention: every composing row receives the full hidden gradient.
    for (auto r : rows)
      for (int k = 0; k < dim_; ++k) relaxed_sub(in[std::size_t(r) * dim_ + k], lr * grad_.center[k]);
    return grad_.loss;
  }

  TrainingState& s_;
  std::mt19937_64 rng_;
  int dim_;
  Eigen::VectorXf hidden_;
  Eigen::VectorXf context_;
  Eigen::MatrixXf negs_;
  std::vector<std::uint32_t> neg_ids_;
  PairGradient<float> grad_;
};

}  // namespace

EmbeddingMatrix train(std::span<const TrainingPair> pairs, const Vocabulary& vocab,
                      const TrainerConfig& config, TrainStats* stats) {
  config.validate();
  if (pairs.empty()) throw Error("cannot train on an empty pair file");
  if (vocab.empty()) throw Error("cannot train with an empty vocabulary");

  const auto freq = pair_frequencies(pairs, vocab.size());
  std::uint64_t total = 0;
  for (auto f : freq) total += f;
  std::vector<double> keep(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i)
    keep[i] = keep_probability(freq[i], total, config.sample);

  const NegativeTable table(freq);
  const auto rows = input_rows(vocab, config.subword);
  EmbeddingMatrix m = init_embeddings(vocab, config);

  TrainingState state{pairs, config, table, keep, rows, m,
                      static_cast<std::uint64_t>(config.epochs) * pairs.size()};

  const std::size_t workers =
      config.deterministic ? 1
                           : std::min<std::size_t>(static_cast<std::size_t>(config.threads),
                                                   pairs.size());
  std::vector<std::unique_ptr<Worker>> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.push_back(std::make_unique<Worker>(state, config.seed + 0x9E3779B97F4A7C15ull * (w + 1)));

  if (workers == 1) {
    pool[0]->run(0, pairs.size());
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = pairs.size() * w / workers;
      const std::size_t end = pairs.size() * (w + 1) / workers;
      threads.emplace_back([&, w, begin, end] { pool[w]->run(begin, end); });
    }
    for (auto& t : threads) t.join();
  }

  if (stats) {
    *stats = {};
    stats->epoch_loss.assign(static_cast<std::size_t>(config.epochs), 0.0);
    std::vector<std::uint64_t> n(stats->epoch_loss.size(), 0);
    for (const auto& w : pool) {
      for (std::size_t e = 0; e < n.size(); ++e) {
        stats->epoch_loss[e] += w->epoch_loss_[e];
        n[e] += w->epoch_examples_[e];
      }
      stats->subsampled += w->subsampled_;
    }
    for (std::size_t e = 0; e < n.size(); ++e) {
      stats->examples += n[e];
      if (n[e] > 0) stats->epoch_loss[e] /= static_cast<double>(n[e]);
    }
  }
  return m;
}

EmbeddingMatrix train(const std::filesystem::path& pair_file, const Vocabulary& vocab,
                      const TrainerConfig& config, TrainStats* stats) {
  const auto pairs = load_pairs(pair_file, vocab);
  return train(std::span<const TrainingPair>(pairs), vocab, config, stats);
}

RowMatrix<float> word_vectors(const EmbeddingMatrix& m, const Vocabulary& vocab) {
  if (m.vocab_size() != vocab.size()) throw Error("embedding/vocabulary size mismatch");
  if (!m.subword) return m.input.topRows(m.output.rows());
  const auto rows = input_rows(vocab, m.subword);
  RowMatrix<float> out(m.output.rows(), m.output.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXf acc = Eigen::VectorXf::Zero(m.dim());
    for (auto r : rows[i]) acc += m.input.row(r).transpose();
    out.row(static_cast<Eigen::Index>(i)) = acc.transpose() / static_cast<float>(rows[i].size());
  }
  return out;
}

CooccurrenceMatrix cooccurrence(std::span<const TrainingPair> pairs, std::size_t vocab_size) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    if (p.left >= vocab_size || p.right >= vocab_size)
      throw Error("pair index outside the vocabulary");
    triplets.emplace_back(p.left, p.right, 1.0);
    triplets.emplace_back(p.right, p.left, 1.0);
  }
  const auto n = static_cast<Eigen::Index>(vocab_size);
  CooccurrenceMatrix counts(n, n);
  counts.setFromTriplets(triplets.begin(), triplets.end());
  return counts;
}

void save_cooccurrence(const std::filesystem::path& path, const CooccurrenceMatrix& counts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write co-occurrence file: " + path.string());
  for (Eigen::Index r = 0; r < counts.outerSize(); ++r)
    for (CooccurrenceMatrix::InnerIterator it(counts, r); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << static_cast<std::uint64_t>(it.value()) << '\n';
}

CooccurrenceMatrix export_cooccurrence(const std::filesystem::path& pair_file,
                                       const Vocabulary& vocab,
                                       const std::filesystem::path& out_file) {
  const auto pairs = load_pairs(pair_file, vocab);
  auto counts = cooccurrence(pairs, vocab.size());
  save_cooccurrence(out_file, counts);
  return counts;
}

}  // namespace webzsl
