#include "webzsl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "webzsl/corpus.hpp"
#include "webzsl/matrix_io.hpp"

namespace webzsl {

namespace {

using nlohmann::json;

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string two_digits(std::size_t i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

template <typename Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <typename Rng>
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + uniform_index(rng, n - i)]);
  all.resize(k);
  return all;
}

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

template <typename Rng>
Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

}  // namespace

void SynthCorpusConfig::validate() const {
  if (concepts < 1 || users < 1 || pieces_per_concept < 1 || vocab_per_concept < 1 ||
      shared_vocab < 1 || bulk_factor < 1 || attributes < 1 || attributes_per_concept < 1)
    throw Error("synthetic corpus counts must all be >= 1");
  if (bulk_users_fraction < 0.0 || bulk_users_fraction > 1.0)
    throw Error("bulk user fraction must lie in [0, 1]");
  if (attribute_rate < 0.0 || attribute_rate > 1.0) throw Error("attribute rate must lie in [0, 1]");
  if (attributes_per_concept > attributes) throw Error("more attributes per concept than attributes");
  double combos = 1.0;
  for (std::size_t i = 0; i < attributes_per_concept; ++i)
    combos = combos * static_cast<double>(attributes - i) / static_cast<double>(i + 1);
  if (combos + 0.5 < static_cast<double>(concepts))
    throw Error("not enough distinct attribute sets for the requested concepts");
}

std::string synth_word(char family, std::size_t index) {
  const std::size_t base = kConsonants.size() * kVowels.size();
  std::string w(1, family);
  std::size_t v = index;
  for (int syllables = 0; syllables < 2 || v > 0; ++syllables) {
    const std::size_t s = v % base;
    v /= base;
    w += kConsonants[s / kVowels.size()];
    w += kVowels[s % kVowels.size()];
  }
  return w;
}

SynthCorpus synth_corpus(const SynthCorpusConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  SynthCorpus out;

  for (std::size_t a = 0; a < config.attributes; ++a) out.attribute_words.push_back(synth_word('a', a));
  for (std::size_t s = 0; s < config.shared_vocab; ++s) out.shared_words.push_back(synth_word('s', s));

  auto sets = combinations(config.attributes, config.attributes_per_concept);
  std::shuffle(sets.begin(), sets.end(), rng);
  for (std::size_t c = 0; c < config.concepts; ++c) {
    SynthConcept sc;
    sc.concept_id = "concept_" + two_digits(c);
    for (std::size_t j = 0; j < config.vocab_per_concept; ++j)
      sc.private_words.push_back(synth_word('n', c * config.vocab_per_concept + j));
    sc.name = sc.private_words.front();
    sc.attributes = sets[c];
    out.concepts.push_back(std::move(sc));
  }

  struct User {
    std::string id;
    bool bulk = false;
    std::vector<std::string> tags;
  };
  std::vector<User> users(config.users);
  const auto bulk_count = static_cast<std::size_t>(
      std::llround(config.bulk_users_fraction * static_cast<double>(config.users)));
  std::vector<std::size_t> order(config.users);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t u = 0; u < config.users; ++u) users[u].id = "user_" + two_digits(u);
  for (std::size_t i = 0; i < bulk_count; ++i) users[order[i]].bulk = true;
  for (auto& u : users) {
    const std::size_t n = std::min<std::size_t>(u.bulk ? 4 : 1, config.shared_vocab);
    for (std::size_t s : sample_without_replacement(rng, config.shared_vocab, n))
      u.tags.push_back(out.shared_words[s]);
    if (u.bulk) out.bulk_users.push_back(u.id);
  }
  std::sort(out.bulk_users.begin(), out.bulk_users.end());

  std::bernoulli_distribution name_p(0.9), attr_p(config.attribute_rate), noise_p(0.5);
  // Each concept walks a fresh user permutation, so a user tags a concept
  // more than once only when pieces outnumber users.
  std::vector<std::size_t> turn(config.users);
  std::iota(turn.begin(), turn.end(), 0);
  for (const auto& sc : out.concepts) {
    for (std::size_t p = 0; p < config.pieces_per_concept; ++p) {
      if (p % users.size() == 0) std::shuffle(turn.begin(), turn.end(), rng);
      const User& user = users[turn[p % users.size()]];
      std::vector<std::string> words;
      if (name_p(rng)) {
        const std::size_t n_private = std::min(config.private_per_piece, sc.private_words.size());
        for (std::size_t j : sample_without_replacement(rng, sc.private_words.size(), n_private))
          words.push_back(sc.private_words[j]);
      }
      for (std::size_t a : sc.attributes)
        if (attr_p(rng)) words.push_back(out.attribute_words[a]);
      if (noise_p(rng)) words.push_back(out.shared_words[uniform_index(rng, out.shared_words.size())]);
      words.insert(words.end(), user.tags.begin(), user.tags.end());

      SynthRecord rec;
      rec.concept_id = sc.concept_id;
      rec.user_id = user.id;
      const std::size_t in_title = std::min<std::size_t>(2, words.size());
      for (std::size_t i = 0; i < in_title; ++i) {
        if (i) rec.title += ' ';
        rec.title += capitalize(words[i]);
      }
      rec.tags.assign(words.begin() + static_cast<std::ptrdiff_t>(in_title), words.end());
      const std::size_t copies = user.bulk ? config.bulk_factor : 1;
      for (std::size_t k = 0; k < copies; ++k) out.records.push_back(rec);
    }
  }
  return out;
}

Eigen::MatrixXd SynthCorpus::attribute_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(concepts.size()),
                                            static_cast<Eigen::Index>(attribute_words.size()));
  for (std::size_t c = 0; c < concepts.size(); ++c)
    for (std::size_t a : concepts[c].attributes) m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(a)) = 1.0;
  return m;
}

std::vector<ClassNameEntry> SynthCorpus::class_names() const {
  std::vector<ClassNameEntry> out;
  for (const auto& c : concepts) out.push_back({c.concept_id, c.private_words});
  return out;
}

std::vector<Taxonomy::Edge> SynthCorpus::taxonomy_edges() const {
  std::vector<Taxonomy::Edge> edges;
  std::vector<bool> used(attribute_words.size(), false);
  for (const auto& c : concepts) {
    const std::size_t a = c.attributes.front();
    edges.emplace_back(c.concept_id, "group_" + attribute_words[a]);
    used[a] = true;
  }
  for (std::size_t a = 0; a < used.size(); ++a)
    if (used[a]) edges.emplace_back("group_" + attribute_words[a], "root");
  return edges;
}

void write_synth_metadata(std::ostream& out, const SynthCorpus& corpus) {
  for (const auto& r : corpus.records) {
    json j = {{"concept", r.concept_id}, {"user", r.user_id}, {"title", r.title}, {"tags", r.tags}};
    out << j.dump() << '\n';
  }
}

void save_synth_metadata(const std::filesystem::path& path, const SynthCorpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_synth_metadata(out, corpus);
  if (!out) throw Error("write failed: " + path.string());
}

void save_ground_truth(const std::filesystem::path& path, const SynthCorpus& corpus) {
  json concepts = json::array();
  for (const auto& c : corpus.concepts) {
    std::vector<std::string> attrs;
    for (std::size_t a : c.attributes) attrs.push_back(corpus.attribute_words[a]);
    concepts.push_back({{"concept", c.concept_id}, {"name", c.name}, {"vocabulary", c.private_words},
                        {"attributes", attrs}});
  }
  json j = {{"concepts", concepts},
            {"attribute_words", corpus.attribute_words},
            {"shared_words", corpus.shared_words},
            {"bulk_users", corpus.bulk_users}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

SynthVisual synth_visual(const std::vector<std::string>& class_ids, const Eigen::MatrixXd& attributes,
                         const SynthVisualConfig& config) {
  const auto classes = class_ids.size();
  if (static_cast<Eigen::Index>(classes) != attributes.rows())
    throw Error("class ids and attribute rows differ in count");
  if (config.seen < 1 || config.seen >= classes) throw Error("seen class count must be in [1, classes)");
  if (config.dim < 1) throw Error("feature dimension must be >= 1");
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> seen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.seen));
  std::vector<std::size_t> unseen(order.begin() + static_cast<std::ptrdiff_t>(config.seen), order.end());
  std::sort(seen.begin(), seen.end());
  std::sort(unseen.begin(), unseen.end());

  const Eigen::MatrixXd M = gaussian(rng, static_cast<Eigen::Index>(config.dim), attributes.cols());
  std::normal_distribution<double> normal(0.0, config.noise);
  auto draw = [&](const std::vector<std::size_t>& cls, std::size_t per_class, Eigen::MatrixXd& X,
                  std::vector<std::string>& labels) {
    X.resize(static_cast<Eigen::Index>(cls.size() * per_class), static_cast<Eigen::Index>(config.dim));
    Eigen::Index row = 0;
    for (std::size_t c : cls) {
      const Eigen::VectorXd mean = M * attributes.row(static_cast<Eigen::Index>(c)).transpose();
      for (std::size_t i = 0; i < per_class; ++i, ++row) {
        for (Eigen::Index d = 0; d < X.cols(); ++d) X(row, d) = mean(d) + normal(rng);
        labels.push_back(class_ids[c]);
      }
    }
  };
  SynthVisual out;
  for (std::size_t c : seen) out.seen_ids.push_back(class_ids[c]);
  for (std::size_t c : unseen) out.unseen_ids.push_back(class_ids[c]);
  draw(seen, config.train_per_class, out.X_train, out.train_labels);
  draw(unseen, config.test_per_class, out.X_test, out.test_labels);
  return out;
}

void save_synth_visual(const std::filesystem::path& dir, const SynthVisual& visual) {
  save_matrix(dir / "train_features.txt", visual.X_train);
  save_lines(dir / "train_labels.txt", visual.train_labels);
  save_matrix(dir / "test_features.txt", visual.X_test);
  save_lines(dir / "test_labels.txt", visual.test_labels);
  save_lines(dir / "seen.txt", visual.seen_ids);
  save_lines(dir / "unseen.txt", visual.unseen_ids);
}

ZslDataset planted_attribute_dataset(const PlantedAttributeConfig& config) {
  if (config.seen < 2 || config.unseen < 1 || config.attributes < 1 || config.dim < 1)
    throw Error("planted attribute dataset needs >= 2 seen, >= 1 unseen classes and positive dimensions");
  std::mt19937_64 rng(config.seed);
  const auto A = static_cast<Eigen::Index>(config.attributes);
  const auto classes = static_cast<Eigen::Index>(config.seen + config.unseen);
  Eigen::MatrixXd S = gaussian(rng, classes, A);
  S.rowwise().normalize();
  const Eigen::MatrixXd M = gaussian(rng, static_cast<Eigen::Index>(config.dim), A);
  std::normal_distribution<double> normal(0.0, config.noise);

  ZslDataset data;
  const auto Cs = static_cast<Eigen::Index>(config.seen);
  data.S_seen = S.topRows(Cs);
  data.S_unseen = S.bottomRows(classes - Cs);
  for (std::size_t c = 0; c < config.seen; ++c) data.seen_ids.push_back("seen_" + two_digits(c));
  for (std::size_t c = 0; c < config.unseen; ++c) data.unseen_ids.push_back("unseen_" + two_digits(c));

  auto draw = [&](const Eigen::MatrixXd& protos, std::size_t per_class, Eigen::MatrixXd& X, std::vector<int>& y) {
    X.resize(protos.rows() * static_cast<Eigen::Index>(per_class), M.rows());
    Eigen::Index row = 0;
    for (Eigen::Index c = 0; c < protos.rows(); ++c) {
      const Eigen::VectorXd mean = M * protos.row(c).transpose();
      for (std::size_t i = 0; i < per_class; ++i, ++row) {
        for (Eigen::Index d = 0; d < X.cols(); ++d) X(row, d) = mean(d) + normal(rng);
        y.push_back(static_cast<int>(c));
      }
    }
  };
  draw(data.S_seen, config.train_per_class, data.X, data.y);
  draw(data.S_unseen, config.test_per_class, data.X_test, data.y_test);
  return data;
}

}  // namespace webzsl
