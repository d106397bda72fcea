#include "webzsl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <json.hpp>

namespace webzsl {

namespace {

using nlohmann::json;

icu::UnicodeString to_nfc_lower(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");

  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString lowered = src.toLower(icu::Locale::getRoot());
  // Lowercasing can produce decomposed sequences (e.g. dotted capital I).
  icu::UnicodeString out = nfc->normalize(lowered, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  return out;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

bool is_word_char(UChar32 c) {
  if (u_isalnum(c)) return true;
  switch (u_charType(c)) {
    case U_NON_SPACING_MARK:
    case U_COMBINING_SPACING_MARK:
    case U_ENCLOSING_MARK:
      return true;
    default:
      return false;
  }
}

bool is_pure_digit(const icu::UnicodeString& s) {
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    if (!u_isdigit(c)) return false;
    i += U16_LENGTH(c);
  }
  return s.length() > 0;
}

// Splits on code points for which `keep` is false.
template <typename Keep>
void split_into(const icu::UnicodeString& s, Keep keep,
                std::vector<icu::UnicodeString>& out) {
  int32_t start = -1;
  int32_t i = 0;
  for (; i < s.length();) {
    UChar32 c = s.char32At(i);
    const int32_t len = U16_LENGTH(c);
    if (keep(c)) {
      if (start < 0) start = i;
    } else if (start >= 0) {
      out.emplace_back(s, start, i - start);
      start = -1;
    }
    i += len;
  }
  if (start >= 0) out.emplace_back(s, start, i - start);
}

std::optional<MetadataPiece> parse_piece(const std::string& line,
                                         const StopWords& stopwords) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!obj.is_object()) return std::nullopt;

  auto concept_it = obj.find("concept");
  auto user_it = obj.find("user");
  if (concept_it == obj.end() || !concept_it->is_string()) return std::nullopt;
  if (user_it == obj.end() || !user_it->is_string()) return std::nullopt;

  std::string title;
  if (auto it = obj.find("title"); it != obj.end()) {
    if (!it->is_string()) return std::nullopt;
    title = it->get<std::string>();
  }
  std::vector<std::string> tags;
  if (auto it = obj.find("tags"); it != obj.end()) {
    if (!it->is_array()) return std::nullopt;
    for (const auto& t : *it) {
      if (!t.is_string()) return std::nullopt;
      tags.push_back(t.get<std::string>());
    }
  }

  MetadataPiece piece;
  piece.concept_id = concept_it->get<std::string>();
  piece.user_id = user_it->get<std::string>();
  piece.tokens = tokenize(title, tags, stopwords);
  return piece;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  return to_utf8(to_nfc_lower(text));
}

std::vector<std::string> tokenize(std::string_view title,
                                  const std::vector<std::string>& tags,
                                  const StopWords& stopwords) {
  std::vector<icu::UnicodeString> pieces;
  split_into(to_nfc_lower(title), is_word_char, pieces);
  for (const auto& tag : tags) {
    split_into(to_nfc_lower(tag), [](UChar32 c) { return !u_isUWhiteSpace(c); },
               pieces);
  }

  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  for (const auto& p : pieces) {
    if (is_pure_digit(p)) continue;
    std::string word = to_utf8(p);
    if (stopwords.contains(word)) continue;
    if (seen.insert(word).second) tokens.push_back(std::move(word));
  }
  return tokens;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stop-word list: " + path.string());
  StopWords words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = normalize_text(line);
    auto first = w.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = w.find_last_not_of(" \t\r");
    words.insert(w.substr(first, last - first + 1));
  }
  return words;
}

std::vector<ConceptCollection> read_metadata(std::istream& in, std::size_t cap,
                                             const StopWords& stopwords,
                                             LoadStats* stats) {
  LoadStats local;
  std::vector<ConceptCollection> collections;
  std::unordered_map<std::string, std::size_t> slot;

  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.lines;
    auto piece = parse_piece(line, stopwords);
    if (!piece) {
      ++local.malformed;
      continue;
    }
    if (piece->tokens.empty()) {
      ++local.empty;
      continue;
    }
    auto [it, inserted] = slot.try_emplace(piece->concept_id, collections.size());
    if (inserted) collections.push_back({piece->concept_id, {}});
    auto& coll = collections[it->second];
    if (coll.pieces.size() >= cap) {
      ++local.truncated;
      continue;
    }
    coll.pieces.push_back(std::move(*piece));
  }
  if (stats) *stats = local;
  return collections;
}

std::vector<ConceptCollection> load_metadata(const std::filesystem::path& path,
                                             std::size_t cap,
                                             const StopWords& stopwords,
                                             LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read metadata file: " + path.string());
  return read_metadata(in, cap, stopwords, stats);
}

Vocabulary::Vocabulary(std::vector<std::string> words,
                       std::vector<std::uint64_t> counts)
    : words_(std::move(words)), counts_(std::move(counts)) {
  if (words_.size() != counts_.size())
    throw Error("vocabulary words/counts length mismatch");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<std::uint32_t>(i)).second)
      throw Error("duplicate vocabulary word: " + words_[i]);
  }
}

std::uint64_t Vocabulary::total_count() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary: " + path.string());
  for (std::size_t i = 0; i < words_.size(); ++i)
    out << words_[i] << ' ' << counts_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read vocabulary: " + path.string());
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string w;
    std::uint64_t c = 0;
    if (!(ls >> w >> c)) throw Error("malformed vocabulary line: " + line);
    words.push_back(std::move(w));
    counts.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(counts));
}

CountMap count_tokens(const std::vector<ConceptCollection>& collections) {
  CountMap counts;
  for (const auto& coll : collections)
    for (const auto& piece : coll.pieces)
      for (const auto& tok : piece.tokens) ++counts[tok];
  return counts;
}

Vocabulary build_vocabulary(const CountMap& counts, std::uint64_t min_count) {
  if (min_count < 1) throw Error("min_count must be >= 1");
  if (counts.empty()) throw Error("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [w, c] : counts)
    if (c >= min_count) kept.emplace_back(w, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  words.reserve(kept.size());
  freq.reserve(kept.size());
  for (auto& [w, c] : kept) {
    words.push_back(std::move(w));
    freq.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(freq));
}

Vocabulary build_vocabulary(const std::vector<ConceptCollection>& collections,
                            std::uint64_t min_count) {
  return build_vocabulary(count_tokens(collections), min_count);
}

void save_tokenized(const std::vector<ConceptCollection>& collections,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus: " + path.string());
  for (const auto& coll : collections) {
    for (const auto& piece : coll.pieces) {
      json obj = {{"concept", piece.concept_id},
                  {"user", piece.user_id},
                  {"tokens", piece.tokens}};
      out << obj.dump() << '\n';
    }
  }
}

std::vector<ConceptCollection> load_tokenized(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read corpus: " + path.string());
  std::vector<ConceptCollection> collections;
  std::unordered_map<std::string, std::size_t> slot;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (!obj.is_object() || !obj.contains("concept") || !obj.contains("user") ||
        !obj.contains("tokens"))
      throw Error(path.string() + ":" + std::to_string(lineno) +
                  ": not a tokenized corpus record");
    MetadataPiece piece{obj["concept"].get<std::string>(),
                        obj["user"].get<std::string>(),
                        obj["tokens"].get<std::vector<std::string>>()};
    auto [it, inserted] = slot.try_emplace(piece.concept_id, collections.size());
    if (inserted) collections.push_back({piece.concept_id, {}});
    collections[it->second].pieces.push_back(std::move(piece));
  }
  return collections;
}

std::size_t piece_count(const std::vector<ConceptCollection>& collections) {
  std::size_t n = 0;
  for (const auto& c : collections) n += c.pieces.size();
  return n;
}

}  // namespace webzsl
