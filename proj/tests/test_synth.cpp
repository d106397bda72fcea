#include <doctest.h>

#include <set>
#include <sstream>

#include "support.hpp"
#include "synth_inputs.hpp"
#include "webzsl/pairs.hpp"

using namespace webzsl;

namespace {

std::vector<ConceptCollection> parsed(const SynthCorpus& corpus) {
  std::stringstream lines;
  write_synth_metadata(lines, corpus);
  return read_metadata(lines, kDefaultPieceCap, {});
}

}  // namespace

TEST_CASE("synthetic words are letter-only and distinct") {
  std::set<std::string> seen;
  for (char f : {'n', 'p', 'a', 's'})
    for (std::size_t i = 0; i < 300; ++i) {
      const auto w = synth_word(f, i);
      CHECK(std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; }));
      CHECK(seen.insert(w).second);
    }
}

TEST_CASE("no bulk: no duplicate pieces, voted equals raw") {
  SynthCorpusConfig c;
  c.pieces_per_concept = 50;
  const auto corpus = synth_corpus(c);
  CHECK(corpus.records.size() == 20 * 50);
  std::set<std::pair<std::string, std::string>> tagged;
  for (const auto& r : corpus.records) CHECK(tagged.emplace(r.concept_id, r.user_id).second);
  CHECK(corpus.bulk_users.empty());
  const auto cols = parsed(corpus);
  const auto v = build_vocabulary(cols, 1);
  CHECK(make_pairs(cols, v, PairMode::voted) == make_pairs(cols, v, PairMode::raw));
}

TEST_CASE("bulk factor 50 multiplies the bulk users' raw pairs") {
  SynthCorpusConfig c;
  c.pieces_per_concept = 40;
  c.bulk_users_fraction = 0.3;
  c.bulk_factor = 50;
  const auto corpus = synth_corpus(c);
  CHECK(corpus.bulk_users.size() == 60);
  const std::set<std::string> bulk(corpus.bulk_users.begin(), corpus.bulk_users.end());
  auto cols = parsed(corpus);
  const auto v = build_vocabulary(cols, 1);

  // restrict to the bulk users' pieces
  std::size_t raw = 0, voted = 0;
  for (const auto& col : cols) {
    ConceptCollection only{col.concept_id, {}};
    for (const auto& p : col.pieces)
      if (bulk.contains(p.user_id)) only.pieces.push_back(p);
    raw += pairs_raw(only, v).size();
    voted += pairs_voted(only, v).size();
  }
  REQUIRE(voted > 0);
  // with more users than pieces per concept nobody tags a concept twice
  CHECK(raw == 50 * voted);
}

TEST_CASE("fixed seed gives byte-identical output") {
  testing::TempDir dir("synth");
  SynthCorpusConfig c;
  c.pieces_per_concept = 30;
  c.bulk_users_fraction = 0.2;
  c.bulk_factor = 3;
  save_synth_metadata(dir / "a.jsonl", synth_corpus(c));
  save_synth_metadata(dir / "b.jsonl", synth_corpus(c));
  save_ground_truth(dir / "a.json", synth_corpus(c));
  save_ground_truth(dir / "b.json", synth_corpus(c));
  CHECK(testing::read_file(dir / "a.jsonl") == testing::read_file(dir / "b.jsonl"));
  CHECK(testing::read_file(dir / "a.json") == testing::read_file(dir / "b.json"));
  c.seed = 2;
  save_synth_metadata(dir / "c.jsonl", synth_corpus(c));
  CHECK(testing::read_file(dir / "a.jsonl") != testing::read_file(dir / "c.jsonl"));
}

TEST_CASE("concepts have distinct attribute sets and a three-level taxonomy") {
  const auto corpus = synth_corpus({});
  const auto A = corpus.attribute_matrix();
  CHECK(A.rows() == 20);
  CHECK(A.cols() == 8);
  std::set<std::vector<std::size_t>> sets;
  for (const auto& c : corpus.concepts) {
    CHECK(c.attributes.size() == 3);
    sets.insert(c.attributes);
  }
  CHECK(sets.size() == 20);
  for (Eigen::Index r = 0; r < A.rows(); ++r) CHECK(A.row(r).sum() == 3.0);
  const auto tax = Taxonomy::from_edges(corpus.taxonomy_edges());
  for (const auto& c : corpus.concepts) CHECK(tax.distance(c.concept_id, "root") == 2);
  CHECK(corpus.class_names().size() == 20);
  CHECK(corpus.class_names()[3].variants == corpus.concepts[3].private_words);
  CHECK(corpus.concepts[3].name == corpus.concepts[3].private_words[0]);
}

TEST_CASE("generator arguments are validated") {
  SynthCorpusConfig c;
  c.concepts = 0;
  CHECK_THROWS_AS(synth_corpus(c), Error);
  c = {};
  c.bulk_factor = 0;
  CHECK_THROWS_AS(synth_corpus(c), Error);
  c = {};
  c.bulk_users_fraction = 1.5;
  CHECK_THROWS_AS(synth_corpus(c), Error);
  c = {};
  c.attributes_per_concept = 9;
  CHECK_THROWS_AS(synth_corpus(c), Error);
}

TEST_CASE("visual split and planted attribute dataset") {
  const auto corpus = synth_corpus({});
  std::vector<std::string> ids;
  for (const auto& c : corpus.concepts) ids.push_back(c.concept_id);
  SynthVisualConfig vc;
  const auto v = synth_visual(ids, corpus.attribute_matrix(), vc);
  CHECK(v.seen_ids.size() == 10);
  CHECK(v.unseen_ids.size() == 10);
  CHECK(v.X_train.rows() == 400);
  CHECK(v.X_test.rows() == 400);
  CHECK(v.X_train.cols() == 32);
  const std::set<std::string> seen(v.seen_ids.begin(), v.seen_ids.end());
  for (const auto& l : v.train_labels) CHECK(seen.contains(l));
  for (const auto& l : v.test_labels) CHECK_FALSE(seen.contains(l));
  CHECK(synth_visual(ids, corpus.attribute_matrix(), vc).X_test == v.X_test);

  const auto d = planted_attribute_dataset({});
  CHECK_NOTHROW(d.validate());
  CHECK(d.S_seen.rows() == 20);
  CHECK(d.S_unseen.rows() == 10);
  CHECK(d.semantic_dim() == 64);
  for (Eigen::Index r = 0; r < d.S_seen.rows(); ++r) CHECK(d.S_seen.row(r).norm() == doctest::Approx(1.0));
}
