#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "webzsl/prototypes.hpp"
#include "webzsl/taxonomy.hpp"
#include "webzsl/zsl.hpp"

namespace webzsl {

// Tag corpus with planted structure. Every concept has a private vocabulary
// (its name variants) and a few attribute words shared with other concepts;
// users carry personal tags drawn from a shared pool. Bulk users upload each
// of their pieces bulk_factor times verbatim.
struct SynthCorpusConfig {
  std::size_t concepts = 20;
  std::size_t users = 200;
  std::size_t pieces_per_concept = 200;
  std::size_t vocab_per_concept = 6;
  std::size_t shared_vocab = 40;
  double bulk_users_fraction = 0.0;
  std::size_t bulk_factor = 1;
  std::uint64_t seed = 1;
  std::size_t attributes = 8;
  std::size_t attributes_per_concept = 3;
  double attribute_rate = 0.8;      // chance each attribute word joins a piece
  std::size_t private_per_piece = 1;  // private words in a piece that has any (90%)

  void validate() const;
};

struct SynthRecord {
  std::string concept_id;
  std::string user_id;
  std::string title;
  std::vector<std::string> tags;
};

struct SynthConcept {
  std::string concept_id;
  std::string name;                        // first private word
  std::vector<std::string> private_words;  // class-name variants
  std::vector<std::size_t> attributes;     // sorted attribute indices
};

struct SynthCorpus {
  std::vector<SynthRecord> records;
  std::vector<SynthConcept> concepts;
  std::vector<std::string> attribute_words;
  std::vector<std::string> shared_words;
  std::vector<std::string> bulk_users;

  // Concepts x attributes, 0/1.
  Eigen::MatrixXd attribute_matrix() const;
  std::vector<ClassNameEntry> class_names() const;
  // root -> one node per concept's first attribute -> concept.
  std::vector<Taxonomy::Edge> taxonomy_edges() const;
};

// Letter-only word, distinct for every (family, index).
std::string synth_word(char family, std::size_t index);

SynthCorpus synth_corpus(const SynthCorpusConfig& config);

// JSON-lines in the ingest schema.
void write_synth_metadata(std::ostream& out, const SynthCorpus& corpus);
void save_synth_metadata(const std::filesystem::path& path, const SynthCorpus& corpus);
// Concept -> name, private words and attribute words.
void save_ground_truth(const std::filesystem::path& path, const SynthCorpus& corpus);

struct SynthVisualConfig {
  std::size_t dim = 32;
  std::size_t train_per_class = 40;
  std::size_t test_per_class = 40;
  double noise = 0.3;
  std::size_t seen = 10;  // first `seen` concepts of a seeded shuffle
  std::uint64_t seed = 1;
};

// Visual features x = M a_c + noise with a random D x A mixing matrix M.
struct SynthVisual {
  std::vector<std::string> seen_ids;
  std::vector<std::string> unseen_ids;
  Eigen::MatrixXd X_train;
  std::vector<std::string> train_labels;
  Eigen::MatrixXd X_test;
  std::vector<std::string> test_labels;
};

SynthVisual synth_visual(const std::vector<std::string>& class_ids, const Eigen::MatrixXd& attributes,
                         const SynthVisualConfig& config);

void save_synth_visual(const std::filesystem::path& dir, const SynthVisual& visual);

// Dataset whose prototypes are dense planted attributes (unit rows) and whose
// features are a noisy linear image of them.
struct PlantedAttributeConfig {
  std::size_t seen = 20;
  std::size_t unseen = 10;
  std::size_t attributes = 64;
  std::size_t dim = 32;
  std::size_t train_per_class = 20;
  std::size_t test_per_class = 20;
  double noise = 0.5;
  std::uint64_t seed = 1;
};

ZslDataset planted_attribute_dataset(const PlantedAttributeConfig& config);

}  // namespace webzsl
