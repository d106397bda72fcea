#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace webzsl {

// Base for all recoverable pipeline errors. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using StopWords = std::unordered_set<std::string>;

// One photo's textual record. Tokens are unique within the piece and never
// contain stop words.
struct MetadataPiece {
  std::string concept_id;
  std::string user_id;
  std::vector<std::string> tokens;
};

struct ConceptCollection {
  std::string concept_id;
  std::vector<MetadataPiece> pieces;
};

struct LoadStats {
  std::size_t lines = 0;
  std::size_t malformed = 0;    // unparsable JSON or schema violation
  std::size_t empty = 0;        // no tokens left after filtering
  std::size_t truncated = 0;    // dropped by the per-concept cap
};

inline constexpr std::size_t kDefaultPieceCap = 5000;

// Reads JSON-lines metadata ({"concept","user","title","tags"}), tokenizes
// every record and groups pieces by concept in order of first appearance.
// Each concept keeps at most `cap` non-empty pieces, in file order.
std::vector<ConceptCollection> load_metadata(const std::filesystem::path& path,
                                             std::size_t cap,
                                             const StopWords& stopwords,
                                             LoadStats* stats = nullptr);

// Same, but from an already-open stream. Used by load_metadata and tests.
std::vector<ConceptCollection> read_metadata(std::istream& in, std::size_t cap,
                                             const StopWords& stopwords,
                                             LoadStats* stats = nullptr);

// NFC + lowercase. Title split on anything that is not a letter, mark or
// digit; tags split on whitespace only so "ivorygull" stays whole. Pure-digit
// tokens and stop words are dropped, duplicates keep their first position.
std::vector<std::string> tokenize(std::string_view title,
                                  const std::vector<std::string>& tags,
                                  const StopWords& stopwords);

// NFC-normalized, lowercased copy of a UTF-8 string.
std::string normalize_text(std::string_view text);

StopWords load_stopwords(const std::filesystem::path& path);

class Vocabulary {
 public:
  Vocabulary() = default;

  // Words must be unique; order defines the index.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  const std::string& word(std::size_t i) const { return words_[i]; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total_count() const;

  std::optional<std::uint32_t> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Raw token tally, merged associatively across partitions.
using CountMap = std::unordered_map<std::string, std::uint64_t>;

CountMap count_tokens(const std::vector<ConceptCollection>& collections);

// Keeps words with count >= min_count, sorted by descending count and then
// lexicographically. Throws if the corpus has no tokens at all.
Vocabulary build_vocabulary(const CountMap& counts, std::uint64_t min_count);
Vocabulary build_vocabulary(const std::vector<ConceptCollection>& collections,
                            std::uint64_t min_count);

// Pre-tokenized corpus: JSON-lines {"concept","user","tokens":[...]}.
void save_tokenized(const std::vector<ConceptCollection>& collections,
                    const std::filesystem::path& path);
std::vector<ConceptCollection> load_tokenized(const std::filesystem::path& path);

std::size_t piece_count(const std::vector<ConceptCollection>& collections);

}  // namespace webzsl
