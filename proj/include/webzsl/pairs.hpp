#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "webzsl/corpus.hpp"

namespace webzsl {

// Unordered word pair stored canonically with left < right.
struct TrainingPair {
  std::uint32_t left = 0;
  std::uint32_t right = 0;

  static TrainingPair canonical(std::uint32_t a, std::uint32_t b) {
    return a < b ? TrainingPair{a, b} : TrainingPair{b, a};
  }
  auto operator<=>(const TrainingPair&) const = default;
};

using PairSink = std::function<void(const TrainingPair&)>;

enum class PairMode { raw, voted };

PairMode parse_pair_mode(std::string_view name);
const char* to_string(PairMode mode);

struct VoteOptions {
  // Above this many buffered dedup records the exact external-sort path is
  // used instead of the in-memory hash set.
  std::size_t memory_budget_bytes = std::size_t{512} << 20;
  std::filesystem::path temp_dir;
};

// In-vocabulary token indices of a piece, in token order.
std::vector<std::uint32_t> piece_indices(const MetadataPiece& piece,
                                         const Vocabulary& vocab);

// Every distinct pair of in-vocabulary tokens of every piece: a piece with t
// such tokens yields t(t-1)/2 pairs. Pairs repeat across pieces.
void pairs_raw(const ConceptCollection& collection, const Vocabulary& vocab,
               const PairSink& sink);
std::vector<TrainingPair> pairs_raw(const ConceptCollection& collection,
                                    const Vocabulary& vocab);

// Like pairs_raw, but each (user, pair) is emitted at most once per concept,
// at its first occurrence.
void pairs_voted(const ConceptCollection& collection, const Vocabulary& vocab,
                 const PairSink& sink, const VoteOptions& options = {});
std::vector<TrainingPair> pairs_voted(const ConceptCollection& collection,
                                      const Vocabulary& vocab,
                                      const VoteOptions& options = {});

void make_pairs(const std::vector<ConceptCollection>& collections,
                const Vocabulary& vocab, PairMode mode, const PairSink& sink,
                const VoteOptions& options = {});
std::vector<TrainingPair> make_pairs(const std::vector<ConceptCollection>& collections,
                                     const Vocabulary& vocab, PairMode mode,
                                     const VoteOptions& options = {});

// Keeps each piece independently with probability 1 - remove_fraction.
std::vector<ConceptCollection> ablate_corpus(
    const std::vector<ConceptCollection>& collections, double remove_fraction,
    std::uint64_t seed);

// "wordA wordB" per line.
void write_pair_text(std::ostream& out, const std::vector<TrainingPair>& pairs,
                     const Vocabulary& vocab);
void save_pair_text(const std::filesystem::path& path,
                    const std::vector<TrainingPair>& pairs, const Vocabulary& vocab);

struct PairReadStats {
  std::size_t lines = 0;
  std::size_t skipped = 0;  // OOV word, self pair or wrong token count
};

std::vector<TrainingPair> read_pair_text(std::istream& in, const Vocabulary& vocab,
                                         PairReadStats* stats = nullptr);
std::vector<TrainingPair> load_pair_text(const std::filesystem::path& path,
                                         const Vocabulary& vocab,
                                         PairReadStats* stats = nullptr);

// Little-endian u32 pairs, 8 bytes each.
void save_pair_binary(const std::filesystem::path& path,
                      const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> load_pair_binary(const std::filesystem::path& path);

// Binary when the extension is ".bin", text otherwise.
std::vector<TrainingPair> load_pairs(const std::filesystem::path& path, const Vocabulary& vocab,
                                     PairReadStats* stats = nullptr);

}  // namespace webzsl
