#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "webzsl/corpus.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("webzsl_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string word(std::size_t i) {
  std::string s = "w";
  do {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  } while (i);
  return s;
}

// Random pieces over `words` distinct words and `users` users.
inline webzsl::ConceptCollection random_collection(std::mt19937_64& rng, const std::string& concept_id,
                                                   std::size_t pieces, std::size_t words,
                                                   std::size_t users, std::size_t max_tokens) {
  webzsl::ConceptCollection c{concept_id, {}};
  std::uniform_int_distribution<std::size_t> wd(0, words - 1), ud(0, users - 1), td(1, max_tokens);
  for (std::size_t p = 0; p < pieces; ++p) {
    webzsl::MetadataPiece piece{concept_id, "u" + std::to_string(ud(rng)), {}};
    const std::size_t t = td(rng);
    while (piece.tokens.size() < t && piece.tokens.size() < words) {
      const auto w = word(wd(rng));
      if (std::find(piece.tokens.begin(), piece.tokens.end(), w) == piece.tokens.end()) piece.tokens.push_back(w);
    }
    c.pieces.push_back(std::move(piece));
  }
  return c;
}

}  // namespace testing
