#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "webzsl/embeddings_io.hpp"

namespace webzsl {

struct ClassNameEntry {
  std::string class_id;
  std::vector<std::string> variants;  // each one or more words
};

// Row c is the prototype of class_ids[c].
struct PrototypeSet {
  std::vector<std::string> class_ids;
  Eigen::MatrixXd matrix;
  bool normalized = false;
  std::vector<std::string> unresolved;  // classes left at the zero vector
  std::vector<std::string> zero_rows;   // rows normalize() could not scale

  std::size_t size() const { return class_ids.size(); }
  Eigen::Index dim() const { return matrix.cols(); }
  // Rows for `ids`, in that order. Throws on an unknown id.
  PrototypeSet select(const std::vector<std::string>& ids) const;
};

// "class_id<TAB>variant1|variant2|..."
std::vector<ClassNameEntry> load_class_names(const std::filesystem::path& path);
void save_class_names(const std::filesystem::path& path,
                      const std::vector<ClassNameEntry>& entries);

// Vector of one variant, or nothing if no token resolves. Tokens resolve via
// the vocabulary, then subword composition; a variant with unresolved tokens
// first tries its concatenated form ("ivory gull" -> "ivorygull") before
// falling back to the mean of the tokens that did resolve.
std::optional<Eigen::VectorXd> variant_vector(const std::string& variant, const WordVectors& wv);

// Mean over resolvable variants of the per-variant token mean. Classes with no
// resolvable variant get the zero vector and are listed in `unresolved`.
PrototypeSet build_prototypes(const std::vector<ClassNameEntry>& entries, const WordVectors& wv);

// Scales every nonzero row to unit l2 norm when enabled; zero rows are left
// alone and reported in `zero_rows`.
PrototypeSet normalize(PrototypeSet protos, bool enable = true);

// Same text layout as embeddings, keyed by class id.
void save_prototypes(const std::filesystem::path& path, const PrototypeSet& protos);
PrototypeSet load_prototypes(const std::filesystem::path& path);

}  // namespace webzsl
