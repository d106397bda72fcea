#include "webzsl/pairs.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "webzsl/external_sort.hpp"

namespace webzsl {

namespace {

struct VoteKey {
  std::uint32_t user;
  std::uint32_t left;
  std::uint32_t right;
  bool operator==(const VoteKey&) const = default;
};

struct VoteKeyHash {
  std::size_t operator()(const VoteKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint32_t v : {k.user, k.left, k.right}) {
      h ^= v;
      h *= 1099511628211ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// Fixed-width record for the external dedup path. `seq` is the position in
// the raw stream so survivors can be put back in first-occurrence order.
struct VoteRecord {
  std::uint32_t user;
  std::uint32_t left;
  std::uint32_t right;
  std::uint32_t pad;
  std::uint64_t seq;
};

struct ByKeyThenSeq {
  bool operator()(const VoteRecord& a, const VoteRecord& b) const {
    return std::tie(a.user, a.left, a.right, a.seq) <
           std::tie(b.user, b.left, b.right, b.seq);
  }
};

struct Survivor {
  std::uint64_t seq;
  std::uint32_t left;
  std::uint32_t right;
};

struct BySeq {
  bool operator()(const Survivor& a, const Survivor& b) const { return a.seq < b.seq; }
};

constexpr std::size_t kHashEntryBytes = 48;

template <typename Visit>
void for_each_piece_pair(const std::vector<std::uint32_t>& idx, Visit&& visit) {
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      visit(TrainingPair::canonical(idx[i], idx[j]));
}

void voted_in_memory(const ConceptCollection& collection, const Vocabulary& vocab,
                     const PairSink& sink) {
  std::unordered_map<std::string, std::uint32_t> users;
  std::unordered_set<VoteKey, VoteKeyHash> seen;
  for (const auto& piece : collection.pieces) {
    auto [uit, _] = users.try_emplace(piece.user_id,
                                      static_cast<std::uint32_t>(users.size()));
    const std::uint32_t user = uit->second;
    for_each_piece_pair(piece_indices(piece, vocab), [&](const TrainingPair& p) {
      if (seen.insert({user, p.left, p.right}).second) sink(p);
    });
  }
}

void voted_external(const ConceptCollection& collection, const Vocabulary& vocab,
                    const PairSink& sink, const VoteOptions& options) {
  const std::size_t cap =
      std::max<std::size_t>(options.memory_budget_bytes / sizeof(VoteRecord), 1);
  ExternalSorter<VoteRecord, ByKeyThenSeq> by_key(cap, options.temp_dir);

  std::unordered_map<std::string, std::uint32_t> users;
  std::uint64_t seq = 0;
  for (const auto& piece : collection.pieces) {
    auto [uit, _] = users.try_emplace(piece.user_id,
                                      static_cast<std::uint32_t>(users.size()));
    const std::uint32_t user = uit->second;
    for_each_piece_pair(piece_indices(piece, vocab), [&](const TrainingPair& p) {
      by_key.push({user, p.left, p.right, 0, seq++});
    });
  }

  ExternalSorter<Survivor, BySeq> by_seq(cap, options.temp_dir);
  bool have_prev = false;
  VoteRecord prev{};
  by_key.drain([&](const VoteRecord& r) {
    if (have_prev && r.user == prev.user && r.left == prev.left && r.right == prev.right)
      return;
    have_prev = true;
    prev = r;
    by_seq.push({r.seq, r.left, r.right});
  });
  by_seq.drain([&](const Survivor& s) { sink({s.left, s.right}); });
}

std::uint64_t raw_pair_count(const ConceptCollection& collection,
                             const Vocabulary& vocab) {
  std::uint64_t n = 0;
  for (const auto& piece : collection.pieces) {
    const std::uint64_t t = piece_indices(piece, vocab).size();
    n += t * (t - (t > 0 ? 1 : 0)) / 2;
  }
  return n;
}

void put_u32le(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 4);
}

bool get_u32le(std::istream& in, std::uint32_t& v) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

}  // namespace

PairMode parse_pair_mode(std::string_view name) {
  if (name == "raw") return PairMode::raw;
  if (name == "voted") return PairMode::voted;
  throw Error("unknown pair mode '" + std::string(name) + "' (raw|voted)");
}

const char* to_string(PairMode mode) {
  return mode == PairMode::raw ? "raw" : "voted";
}

std::vector<std::uint32_t> piece_indices(const MetadataPiece& piece,
                                         const Vocabulary& vocab) {
  std::vector<std::uint32_t> idx;
  idx.reserve(piece.tokens.size());
  for (const auto& tok : piece.tokens)
    if (auto i = vocab.find(tok)) idx.push_back(*i);
  return idx;
}

void pairs_raw(const ConceptCollection& collection, const Vocabulary& vocab,
               const PairSink& sink) {
  for (const auto& piece : collection.pieces)
    for_each_piece_pair(piece_indices(piece, vocab), sink);
}

std::vector<TrainingPair> pairs_raw(const ConceptCollection& collection,
                                    const Vocabulary& vocab) {
  std::vector<TrainingPair> out;
  pairs_raw(collection, vocab, [&](const TrainingPair& p) { out.push_back(p); });
  return out;
}

void pairs_voted(const ConceptCollection& collection, const Vocabulary& vocab,
                 const PairSink& sink, const VoteOptions& options) {
  const std::uint64_t upper = raw_pair_count(collection, vocab);
  if (upper * kHashEntryBytes <= options.memory_budget_bytes)
    voted_in_memory(collection, vocab, sink);
  else
    voted_external(collection, vocab, sink, options);
}

std::vector<TrainingPair> pairs_voted(const ConceptCollection& collection,
                                      const Vocabulary& vocab,
                                      const VoteOptions& options) {
  std::vector<TrainingPair> out;
  pairs_voted(collection, vocab, [&](const TrainingPair& p) { out.push_back(p); },
              options);
  return out;
}

void make_pairs(const std::vector<ConceptCollection>& collections,
                const Vocabulary& vocab, PairMode mode, const PairSink& sink,
                const VoteOptions& options) {
  for (const auto& coll : collections) {
    if (mode == PairMode::raw)
      pairs_raw(coll, vocab, sink);
    else
      pairs_voted(coll, vocab, sink, options);
  }
}

std::vector<TrainingPair> make_pairs(const std::vector<ConceptCollection>& collections,
                                     const Vocabulary& vocab, PairMode mode,
                                     const VoteOptions& options) {
  std::vector<TrainingPair> out;
  make_pairs(collections, vocab, mode, [&](const TrainingPair& p) { out.push_back(p); },
             options);
  return out;
}

std::vector<ConceptCollection> ablate_corpus(
    const std::vector<ConceptCollection>& collections, double remove_fraction,
    std::uint64_t seed) {
  if (!(remove_fraction >= 0.0 && remove_fraction < 1.0))
    throw Error("ablation fraction must lie in [0, 1)");
  if (remove_fraction == 0.0) return collections;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - remove_fraction);
  std::vector<ConceptCollection> out;
  for (const auto& coll : collections) {
    ConceptCollection kept{coll.concept_id, {}};
    for (const auto& piece : coll.pieces)
      if (keep(rng)) kept.pieces.push_back(piece);
    if (!kept.pieces.empty()) out.push_back(std::move(kept));
  }
  return out;
}

void write_pair_text(std::ostream& out, const std::vector<TrainingPair>& pairs,
                     const Vocabulary& vocab) {
  for (const auto& p : pairs) out << vocab.word(p.left) << ' ' << vocab.word(p.right) << '\n';
}

void save_pair_text(const std::filesystem::path& path,
                    const std::vector<TrainingPair>& pairs, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write pair file: " + path.string());
  write_pair_text(out, pairs, vocab);
}

std::vector<TrainingPair> read_pair_text(std::istream& in, const Vocabulary& vocab,
                                         PairReadStats* stats) {
  PairReadStats local;
  std::vector<TrainingPair> pairs;
  std::string line, a, b, extra;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.lines;
    std::istringstream ls(line);
    if (!(ls >> a >> b) || (ls >> extra)) {
      ++local.skipped;
      continue;
    }
    auto ia = vocab.find(a);
    auto ib = vocab.find(b);
    if (!ia || !ib || *ia == *ib) {
      ++local.skipped;
      continue;
    }
    pairs.push_back(TrainingPair::canonical(*ia, *ib));
  }
  if (stats) *stats = local;
  return pairs;
}

std::vector<TrainingPair> load_pair_text(const std::filesystem::path& path,
                                         const Vocabulary& vocab,
                                         PairReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read pair file: " + path.string());
  return read_pair_text(in, vocab, stats);
}

void save_pair_binary(const std::filesystem::path& path,
                      const std::vector<TrainingPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write pair file: " + path.string());
  for (const auto& p : pairs) {
    put_u32le(out, p.left);
    put_u32le(out, p.right);
  }
}

std::vector<TrainingPair> load_pair_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read pair file: " + path.string());
  std::vector<TrainingPair> pairs;
  std::uint32_t a = 0, b = 0;
  while (get_u32le(in, a)) {
    if (!get_u32le(in, b)) throw Error("truncated binary pair file: " + path.string());
    pairs.push_back(TrainingPair::canonical(a, b));
  }
  return pairs;
}

std::vector<TrainingPair> load_pairs(const std::filesystem::path& path, const Vocabulary& vocab,
                                     PairReadStats* stats) {
  if (path.extension() != ".bin") return load_pair_text(path, vocab, stats);
  auto pairs = load_pair_binary(path);
  for (const auto& p : pairs)
    if (p.right >= vocab.size() || p.left == p.right)
      throw Error("binary pair file does not match the vocabulary: " + path.string());
  if (stats) stats->lines = pairs.size();
  return pairs;
}

}  // namespace webzsl
