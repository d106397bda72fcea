#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "webzsl/ablation.hpp"
#include "webzsl/corpus.hpp"
#include "webzsl/embeddings_io.hpp"
#include "webzsl/manifest.hpp"
#include "webzsl/matrix_io.hpp"
#include "webzsl/metrics.hpp"
#include "webzsl/pairs.hpp"
#include "webzsl/pipeline.hpp"
#include "webzsl/prototypes.hpp"
#include "webzsl/sgns.hpp"
#include "webzsl/synth.hpp"
#include "webzsl/taxonomy.hpp"
#include "webzsl/zsl.hpp"

namespace fs = std::filesystem;
using namespace webzsl;

namespace {

struct Globals {
  int threads = 1;
  std::uint64_t seed = 1;
};

struct TrainerOptions {
  int epochs = 25;
  double lr = 0.1;
  int negatives = 5;
  double sample = 1e-4;
  int dim = 300;
  bool subword = false;
  int minn = 4;
  int maxn = 6;
  std::uint32_t buckets = 2'000'000;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Initial learning rate")->check(CLI::PositiveNumber);
    app->add_option("--negatives", negatives, "Negative samples per example")->check(CLI::PositiveNumber);
    app->add_option("--sample", sample, "Subsampling threshold, 0 disables");
    app->add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);
    app->add_flag("--subword", subword, "Learn character n-gram vectors");
    app->add_option("--minn", minn, "Shortest n-gram");
    app->add_option("--maxn", maxn, "Longest n-gram");
    app->add_option("--buckets", buckets, "n-gram hash buckets");
  }

  TrainerConfig config(const Globals& g) const {
    TrainerConfig c;
    c.epochs = epochs;
    c.lr0 = lr;
    c.negatives = negatives;
    c.sample = sample;
    c.dim = dim;
    if (subword) c.subword = SubwordConfig{minn, maxn, buckets};
    c.seed = g.seed;
    c.threads = g.threads;
    c.deterministic = g.threads <= 1;
    return c;
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw CLI::ValidationError("not a number: '" + s + "'");
  return v;
}

// "name=v1,v2,..." entries.
std::map<std::string, std::vector<double>> parse_grid(const std::vector<std::string>& entries) {
  std::map<std::string, std::vector<double>> grid;
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("grid entries look like name=v1,v2");
    auto& values = grid[e.substr(0, eq)];
    for (const auto& v : split(e.substr(eq + 1), ',')) values.push_back(to_double(v));
  }
  return grid;
}

// A count, or a comma-separated list of class ids.
ValidationClasses parse_validation(const std::string& text) {
  if (!text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); }))
    return static_cast<std::size_t>(std::stoull(text));
  return split(text, ',');
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& v : split(text, ',')) {
    const double d = to_double(v);
    if (d < 1 || d != std::floor(d)) throw CLI::ValidationError("expected positive integers: '" + text + "'");
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  for (const auto& v : split(text, ',')) out.push_back(to_double(v));
  return out;
}

// Every option of the invoked subcommand (plus globals) with its effective value.
nlohmann::json option_values(const CLI::App& app, const CLI::App& sub) {
  nlohmann::json j = nlohmann::json::object();
  auto add = [&](const CLI::App& a, const std::string& prefix) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string& name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      std::string value;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
      } else {
        value = opt->get_default_str();
      }
      j[prefix + name] = value;
    }
  };
  add(app, "");
  add(sub, sub.get_name() + ".");
  return j;
}

std::string env_name(const std::string& sub, const std::string& opt) {
  std::string s = "WEBZSL_" + (sub.empty() ? "" : sub + "_") + opt;
  for (auto& c : s) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void attach_env(CLI::App& app) {
  for (CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    opt->envname(env_name("", opt->get_lnames().front()));
  }
  for (CLI::App* sub : app.get_subcommands({})) {
    for (CLI::Option* opt : sub->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
      opt->envname(env_name(sub->get_name(), opt->get_lnames().front()));
    }
  }
}

class Runner {
 public:
  Runner(CLI::App& app, Globals& g) : app_(app), g_(g) {}

  void manifest(const CLI::App& sub, const fs::path& artifact, std::vector<std::string> inputs,
                std::vector<std::string> outputs) const {
    Manifest m;
    m.command = sub.get_name();
    m.config = option_values(app_, sub);
    m.seeds["seed"] = g_.seed;
    m.inputs = std::move(inputs);
    m.outputs = std::move(outputs);
    write_manifest(artifact, m);
  }

 private:
  CLI::App& app_;
  Globals& g_;
};

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Webly supervised zero-shot learning toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file: [subcommand] sections of key=value, flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads; 1 means deterministic")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for every stage");
  Runner runner(app, g);
  std::function<void()> action;

  // synth
  SynthCorpusConfig sc;
  SynthVisualConfig sv;
  fs::path synth_dir;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and ZSL benchmark");
  synth->add_option("--output-dir", synth_dir, "Destination directory")->required();
  synth->add_option("--concepts", sc.concepts);
  synth->add_option("--users", sc.users);
  synth->add_option("--pieces-per-concept", sc.pieces_per_concept);
  synth->add_option("--vocab-per-concept", sc.vocab_per_concept);
  synth->add_option("--shared-vocab", sc.shared_vocab);
  synth->add_option("--bulk-fraction", sc.bulk_users_fraction, "Fraction of bulk-tagging users");
  synth->add_option("--bulk-factor", sc.bulk_factor, "Copies of every bulk upload");
  synth->add_option("--attributes", sc.attributes);
  synth->add_option("--attributes-per-concept", sc.attributes_per_concept);
  synth->add_option("--attribute-rate", sc.attribute_rate);
  synth->add_option("--private-per-piece", sc.private_per_piece);
  synth->add_option("--feature-dim", sv.dim);
  synth->add_option("--train-per-class", sv.train_per_class);
  synth->add_option("--test-per-class", sv.test_per_class);
  synth->add_option("--noise", sv.noise);
  synth->add_option("--seen", sv.seen, "Seen classes");
  synth->callback([&] {
    action = [&] {
      sc.seed = g.seed;
      sv.seed = g.seed;
      fs::create_directories(synth_dir);
      const auto corpus = synth_corpus(sc);
      save_synth_metadata(synth_dir / "metadata.jsonl", corpus);
      save_ground_truth(synth_dir / "ground_truth.json", corpus);
      save_class_names(synth_dir / "class_names.tsv", corpus.class_names());
      std::vector<std::string> ids;
      for (const auto& c : corpus.concepts) ids.push_back(c.concept_id);
      save_matrix(synth_dir / "attributes.txt", corpus.attribute_matrix());
      save_lines(synth_dir / "attribute_classes.txt", ids);
      {
        std::ofstream tax(synth_dir / "taxonomy.tsv");
        for (const auto& [child, parent] : corpus.taxonomy_edges()) tax << child << '\t' << parent << '\n';
      }
      save_synth_visual(synth_dir, synth_visual(ids, corpus.attribute_matrix(), sv));
      runner.manifest(*synth, synth_dir / "metadata.jsonl", {},
                      {"metadata.jsonl", "ground_truth.json", "class_names.tsv", "attributes.txt",
                       "attribute_classes.txt", "taxonomy.tsv", "train_features.txt", "train_labels.txt",
                       "test_features.txt", "test_labels.txt", "seen.txt", "unseen.txt"});
      std::cerr << "synth: " << corpus.records.size() << " records, " << corpus.concepts.size() << " concepts\n";
    };
  });

  // ingest
  fs::path in_meta, in_stop, in_out, in_vocab;
  std::size_t in_cap = kDefaultPieceCap;
  std::uint64_t in_min = 5;
  auto* ingest = app.add_subcommand("ingest", "Tokenize metadata and build the vocabulary");
  ingest->add_option("--input", in_meta, "JSON-lines metadata")->required()->check(CLI::ExistingFile);
  ingest->add_option("--stopwords", in_stop, "One stop word per line")->check(CLI::ExistingFile);
  ingest->add_option("--cap", in_cap, "Pieces kept per concept");
  ingest->add_option("--min-count", in_min, "Minimum word count")->check(CLI::PositiveNumber);
  ingest->add_option("--output", in_out, "Tokenized corpus")->required();
  ingest->add_option("--vocab", in_vocab, "Vocabulary file")->required();
  ingest->callback([&] {
    action = [&] {
      const StopWords stop = in_stop.empty() ? StopWords{} : load_stopwords(in_stop);
      LoadStats stats;
      const auto corpus = load_metadata(in_meta, in_cap, stop, &stats);
      const auto vocab = build_vocabulary(corpus, in_min);
      ensure_parent(in_out);
      ensure_parent(in_vocab);
      save_tokenized(corpus, in_out);
      vocab.save(in_vocab);
      std::vector<std::string> inputs{in_meta.string()};
      if (!in_stop.empty()) inputs.push_back(in_stop.string());
      runner.manifest(*ingest, in_out, inputs, {in_out.string(), in_vocab.string()});
      std::cerr << "ingest: " << stats.lines << " lines, " << stats.malformed << " malformed, " << stats.empty
                << " empty, " << stats.truncated << " over cap; " << piece_count(corpus) << " pieces, "
                << vocab.size() << " words\n";
    };
  });

  // pairs
  fs::path pr_corpus, pr_vocab, pr_out, pr_tmp;
  std::string pr_mode = "voted";
  double pr_ablate = 0.0;
  std::size_t pr_budget_mib = 512;
  auto* pairs = app.add_subcommand("pairs", "Emit word pairs (text, or binary for .bin)");
  pairs->add_option("--corpus", pr_corpus, "Tokenized corpus")->required()->check(CLI::ExistingFile);
  pairs->add_option("--vocab", pr_vocab)->required()->check(CLI::ExistingFile);
  pairs->add_option("--mode", pr_mode)->check(CLI::IsMember({"raw", "voted"}));
  pairs->add_option("--ablate", pr_ablate, "Fraction of pieces removed first")->check(CLI::Range(0.0, 0.999999));
  pairs->add_option("--memory-budget", pr_budget_mib, "MiB before voting spills to disk");
  pairs->add_option("--temp-dir", pr_tmp);
  pairs->add_option("--output", pr_out)->required();
  pairs->callback([&] {
    action = [&] {
      auto corpus = load_tokenized(pr_corpus);
      if (pr_ablate > 0.0) corpus = ablate_corpus(corpus, pr_ablate, g.seed);
      const auto vocab = Vocabulary::load(pr_vocab);
      VoteOptions vote;
      vote.memory_budget_bytes = pr_budget_mib << 20;
      vote.temp_dir = pr_tmp;
      const auto out = make_pairs(corpus, vocab, parse_pair_mode(pr_mode), vote);
      ensure_parent(pr_out);
      if (pr_out.extension() == ".bin")
        save_pair_binary(pr_out, out);
      else
        save_pair_text(pr_out, out, vocab);
      runner.manifest(*pairs, pr_out, {pr_corpus.string(), pr_vocab.string()}, {pr_out.string()});
      std::cerr << "pairs: " << out.size() << " " << pr_mode << " pairs\n";
    };
  });

  // train-embed
  fs::path tr_pairs, tr_vocab, tr_out, tr_log;
  TrainerOptions tr;
  auto* train_cmd = app.add_subcommand("train-embed", "Train skip-gram embeddings on a pair file");
  train_cmd->add_option("--pairs", tr_pairs)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--vocab", tr_vocab)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--output", tr_out, "word2vec text file")->required();
  train_cmd->add_option("--loss-log", tr_log, "CSV of mean loss per epoch");
  tr.add(train_cmd);
  train_cmd->callback([&] {
    action = [&] {
      const auto vocab = Vocabulary::load(tr_vocab);
      TrainStats stats;
      const auto m = train(tr_pairs, vocab, tr.config(g), &stats);
      ensure_parent(tr_out);
      save_embeddings(tr_out, make_word_vectors(m, vocab));
      std::vector<std::string> outputs{tr_out.string()};
      if (!tr_log.empty()) {
        std::ofstream log(tr_log);
        log << "epoch,loss\n";
        for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) log << e + 1 << ',' << fixed6(stats.epoch_loss[e]) << '\n';
        outputs.push_back(tr_log.string());
      }
      runner.manifest(*train_cmd, tr_out, {tr_pairs.string(), tr_vocab.string()}, outputs);
      std::cerr << "train-embed: " << stats.examples << " examples, final loss "
                << (stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back()) << '\n';
    };
  });

  // export-cooc
  fs::path co_pairs, co_vocab, co_out;
  auto* cooc = app.add_subcommand("export-cooc", "Write symmetric co-occurrence counts");
  cooc->add_option("--pairs", co_pairs)->required()->check(CLI::ExistingFile);
  cooc->add_option("--vocab", co_vocab)->required()->check(CLI::ExistingFile);
  cooc->add_option("--output", co_out)->required();
  cooc->callback([&] {
    action = [&] {
      ensure_parent(co_out);
      const auto m = export_cooccurrence(co_pairs, Vocabulary::load(co_vocab), co_out);
      runner.manifest(*cooc, co_out, {co_pairs.string(), co_vocab.string()}, {co_out.string()});
      std::cerr << "export-cooc: " << m.nonZeros() << " nonzero cells\n";
    };
  });

  // prototypes
  fs::path pt_emb, pt_names, pt_out;
  bool pt_raw = false;
  auto* protos_cmd = app.add_subcommand("prototypes", "Build class prototypes from embeddings");
  protos_cmd->add_option("--embeddings", pt_emb)->required()->check(CLI::ExistingFile);
  protos_cmd->add_option("--class-names", pt_names, "class_id<TAB>name|name")->required()->check(CLI::ExistingFile);
  protos_cmd->add_option("--output", pt_out)->required();
  protos_cmd->add_flag("--no-normalize", pt_raw, "Keep prototype norms");
  protos_cmd->callback([&] {
    action = [&] {
      auto protos = normalize(build_prototypes(load_class_names(pt_names), load_embeddings(pt_emb)), !pt_raw);
      ensure_parent(pt_out);
      save_prototypes(pt_out, protos);
      runner.manifest(*protos_cmd, pt_out, {pt_emb.string(), pt_names.string()}, {pt_out.string()});
      for (const auto& c : protos.unresolved) std::cerr << "prototypes: unresolved class " << c << '\n';
      std::cerr << "prototypes: " << protos.size() << " classes\n";
    };
  });

  // zsl-fit
  fs::path zf_protos, zf_feat, zf_labels, zf_seen, zf_out, zf_table;
  std::string zf_model = "linear_s2v", zf_val = "3";
  std::vector<std::string> zf_grid;
  auto* fit = app.add_subcommand("zsl-fit", "Cross-validate and fit a ZSL model on seen classes");
  fit->add_option("--model", zf_model)->check(CLI::IsMember({"linear_v2s", "linear_s2v", "eszsl", "conse", "devise"}));
  fit->add_option("--prototypes", zf_protos)->required()->check(CLI::ExistingFile);
  fit->add_option("--features", zf_feat, "Training features")->required()->check(CLI::ExistingFile);
  fit->add_option("--labels", zf_labels, "Training class ids")->required()->check(CLI::ExistingFile);
  fit->add_option("--seen", zf_seen, "Seen class ids")->required()->check(CLI::ExistingFile);
  fit->add_option("--grid", zf_grid, "name=v1,v2 (repeatable)");
  fit->add_option("--validation", zf_val, "Validation class count or id list");
  fit->add_option("--output", zf_out, "Model file")->required();
  fit->add_option("--cv-table", zf_table, "CSV of validation accuracy per grid point");
  fit->callback([&] {
    action = [&] {
      VisualData v;
      v.X_train = load_matrix(zf_feat);
      v.train_labels = load_lines(zf_labels);
      v.seen_ids = load_lines(zf_seen);
      if (static_cast<std::size_t>(v.X_train.rows()) != v.train_labels.size())
        throw Error("training features and labels differ in count");
      const auto data = make_dataset(v, load_prototypes(zf_protos));
      const ModelKind kind = parse_model_kind(zf_model);
      const auto grid = zf_grid.empty() ? default_grid(kind) : parse_grid(zf_grid);
      const auto cv = cross_validate(data, kind, grid, parse_validation(zf_val), g.seed, g.threads);
      ensure_parent(zf_out);
      save_model(zf_out, cv.model);
      std::vector<std::string> outputs{zf_out.string()};
      if (!zf_table.empty()) {
        std::ofstream t(zf_table);
        for (const auto& [name, values] : grid) t << name << ',';
        t << "top1\n";
        for (const auto& [point, acc] : cv.table) {
          for (const auto& [name, value] : point) t << value << ',';
          t << fixed6(acc) << '\n';
        }
        outputs.push_back(zf_table.string());
      }
      runner.manifest(*fit, zf_out, {zf_protos.string(), zf_feat.string(), zf_labels.string(), zf_seen.string()},
                      outputs);
      std::cerr << "zsl-fit: " << zf_model << " validation top-1 " << fixed6(cv.best_accuracy);
      for (const auto& [name, value] : cv.best) std::cerr << ' ' << name << '=' << value;
      std::cerr << '\n';
    };
  });

  // zsl-eval
  fs::path ze_model, ze_protos, ze_feat, ze_labels, ze_unseen, ze_out, ze_pred;
  std::string ze_topk = "1,5,10";
  std::size_t ze_depth = 10;
  auto* eval = app.add_subcommand("zsl-eval", "Rank unseen classes and report top-k accuracy");
  eval->add_option("--model-file", ze_model)->required()->check(CLI::ExistingFile);
  eval->add_option("--prototypes", ze_protos)->required()->check(CLI::ExistingFile);
  eval->add_option("--features", ze_feat, "Test features")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", ze_labels, "Test class ids")->required()->check(CLI::ExistingFile);
  eval->add_option("--unseen", ze_unseen, "Unseen class ids")->required()->check(CLI::ExistingFile);
  eval->add_option("--topk", ze_topk, "Comma-separated k values");
  eval->add_option("--output", ze_out, "Metrics CSV")->required();
  eval->add_option("--predictions", ze_pred, "CSV of ranked predictions");
  eval->add_option("--depth", ze_depth, "Predictions kept per sample");
  eval->callback([&] {
    action = [&] {
      const auto model = load_model(ze_model);
      const auto protos = load_prototypes(ze_protos);
      ZslDataset d;
      d.X_test = load_matrix(ze_feat);
      d.unseen_ids = load_lines(ze_unseen);
      d.S_unseen = protos.select(d.unseen_ids).matrix;
      const auto labels = load_lines(ze_labels);
      if (static_cast<std::size_t>(d.X_test.rows()) != labels.size())
        throw Error("test features and labels differ in count");
      std::map<std::string, int> index;
      for (std::size_t i = 0; i < d.unseen_ids.size(); ++i) index[d.unseen_ids[i]] = static_cast<int>(i);
      for (const auto& l : labels) {
        auto it = index.find(l);
        if (it == index.end()) throw Error("test label '" + l + "' is not an unseen class");
        d.y_test.push_back(it->second);
      }
      const auto report = evaluate(model, d, parse_counts(ze_topk));
      ensure_parent(ze_out);
      save_metrics_csv(ze_out, report);
      std::vector<std::string> outputs{ze_out.string()};
      if (!ze_pred.empty()) {
        save_predictions(ze_pred, model, d, ze_depth);
        outputs.push_back(ze_pred.string());
      }
      runner.manifest(*eval, ze_out,
                      {ze_model.string(), ze_protos.string(), ze_feat.string(), ze_labels.string(),
                       ze_unseen.string()},
                      outputs);
      for (const auto& [k, acc] : report.topk) std::cerr << "zsl-eval: top-" << k << ' ' << fixed6(acc) << '\n';
    };
  });

  // analyze
  fs::path an_pred, an_tax, an_seen, an_unseen, an_dir;
  auto* analyze = app.add_subcommand("analyze", "Hierarchy distances and per-class difficulty");
  analyze->add_option("--predictions", an_pred, "CSV from zsl-eval --predictions")->required()->check(CLI::ExistingFile);
  analyze->add_option("--taxonomy", an_tax, "child<TAB>parent")->required()->check(CLI::ExistingFile);
  analyze->add_option("--seen", an_seen)->required()->check(CLI::ExistingFile);
  analyze->add_option("--unseen", an_unseen)->required()->check(CLI::ExistingFile);
  analyze->add_option("--output-dir", an_dir)->required();
  analyze->callback([&] {
    action = [&] {
      const auto tax = Taxonomy::load(an_tax);
      const auto seen = load_lines(an_seen);
      const auto unseen = load_lines(an_unseen);
      std::vector<std::string> truth, predicted;
      {
        std::ifstream in(an_pred);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
          const auto cells = split(line, ',');
          if (cells.size() < 2) throw Error("prediction rows need a true and a predicted id");
          truth.push_back(cells[0]);
          predicted.push_back(cells[1]);
        }
      }
      std::map<std::string, std::pair<std::size_t, std::size_t>> hits;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& h = hits[truth[i]];
        ++h.second;
        if (predicted[i] == truth[i]) ++h.first;
      }
      std::map<std::string, double> acc;
      for (const auto& [c, h] : hits) acc[c] = static_cast<double>(h.first) / static_cast<double>(h.second);

      fs::create_directories(an_dir);
      {
        std::ofstream out(an_dir / "distance_histogram.csv");
        out << "distance,count\n";
        for (const auto& [d, n] : distance_histogram(predicted, truth, tax)) out << d << ',' << n << '\n';
      }
      const auto diff = class_difficulty(tax, seen, unseen, acc);
      {
        std::ofstream out(an_dir / "class_difficulty.csv");
        out << "class_id,min_dist_to_seen,sibling_count,unseen_closer_count,accuracy\n";
        for (const auto& d : diff)
          out << d.class_id << ',' << d.min_dist_to_seen << ',' << d.sibling_count << ','
              << d.unseen_closer_count << ',' << fixed6(d.accuracy) << '\n';
      }
      {
        std::ofstream out(an_dir / "correlations.csv");
        out << "variable,pearson\n";
        std::vector<double> a, dist, sib, closer;
        for (const auto& d : diff) {
          if (!hits.contains(d.class_id)) continue;
          a.push_back(d.accuracy);
          dist.push_back(d.min_dist_to_seen);
          sib.push_back(d.sibling_count);
          closer.push_back(d.unseen_closer_count);
        }
        for (const auto& [name, xs] : {std::pair{"min_dist_to_seen", &dist}, std::pair{"sibling_count", &sib},
                                       std::pair{"unseen_closer_count", &closer}}) {
          out << name << ',';
          try {
            out << fixed6(pearson(*xs, a)) << '\n';
          } catch (const Error&) {
            out << "undefined\n";
          }
        }
      }
      const auto marker = an_dir / "distance_histogram.csv";
      runner.manifest(*analyze, marker, {an_pred.string(), an_tax.string(), an_seen.string(), an_unseen.string()},
                      {"distance_histogram.csv", "class_difficulty.csv", "correlations.csv"});
      std::cerr << "analyze: " << truth.size() << " predictions\n";
    };
  });

  // shared by run and ablate-corpus
  fs::path pl_meta, pl_stop, pl_names, pl_data;
  std::size_t pl_cap = kDefaultPieceCap;
  std::uint64_t pl_min = 5;
  std::string pl_mode = "voted", pl_model = "linear_s2v", pl_val = "3", pl_topk = "1,5,10";
  std::vector<std::string> pl_grid;
  bool pl_raw_protos = false;
  TrainerOptions pl_tr;
  auto pipeline_options = [&](CLI::App* sub) {
    sub->add_option("--metadata", pl_meta, "JSON-lines metadata")->required()->check(CLI::ExistingFile);
    sub->add_option("--stopwords", pl_stop)->check(CLI::ExistingFile);
    sub->add_option("--cap", pl_cap, "Pieces kept per concept");
    sub->add_option("--min-count", pl_min)->check(CLI::PositiveNumber);
    sub->add_option("--class-names", pl_names)->required()->check(CLI::ExistingFile);
    sub->add_option("--data-dir", pl_data, "Directory with features, labels and splits")
        ->required()->check(CLI::ExistingDirectory);
    sub->add_option("--mode", pl_mode)->check(CLI::IsMember({"raw", "voted"}));
    sub->add_option("--validation", pl_val, "Validation class count or id list");
    sub->add_option("--grid", pl_grid, "name=v1,v2 (repeatable)");
    sub->add_flag("--no-normalize", pl_raw_protos);
    pl_tr.add(sub);
  };
  auto pipeline_setup = [&](PipelineInputs& inputs, PipelineSettings& s) {
    const StopWords stop = pl_stop.empty() ? StopWords{} : load_stopwords(pl_stop);
    inputs.corpus = load_metadata(pl_meta, pl_cap, stop);
    inputs.class_names = load_class_names(pl_names);
    inputs.visual = load_visual(VisualFiles::in_directory(pl_data));
    s.min_count = pl_min;
    s.mode = parse_pair_mode(pl_mode);
    s.seed = g.seed;
    s.trainer = pl_tr.config(g);
    s.normalize = !pl_raw_protos;
    s.model = parse_model_kind(pl_model);
    s.grid = parse_grid(pl_grid);
    s.validation = parse_validation(pl_val);
    s.threads = g.threads;
  };

  // run
  fs::path run_dir;
  auto* run = app.add_subcommand("run", "Full pipeline from metadata to an accuracy report");
  pipeline_options(run);
  run->add_option("--model", pl_model)->check(CLI::IsMember({"linear_v2s", "linear_s2v", "eszsl", "conse", "devise"}));
  run->add_option("--topk", pl_topk);
  run->add_option("--output-dir", run_dir)->required();
  run->callback([&] {
    action = [&] {
      PipelineInputs inputs;
      PipelineSettings s;
      pipeline_setup(inputs, s);
      s.topk = parse_counts(pl_topk);
      const auto result = run_pipeline(inputs, s);
      fs::create_directories(run_dir);
      save_metrics_csv(run_dir / "metrics.csv", result.report);
      save_model(run_dir / "model.txt", result.model);
      runner.manifest(*run, run_dir / "metrics.csv", {pl_meta.string(), pl_names.string(), pl_data.string()},
                      {"metrics.csv", "model.txt"});
      for (const auto& c : result.unresolved) std::cerr << "run: unresolved class " << c << '\n';
      std::cerr << "run: " << result.pieces << " pieces, " << result.vocab_size << " words, " << result.pairs
                << " pairs\n";
      for (const auto& [k, acc] : result.report.topk) std::cerr << "run: top-" << k << ' ' << fixed6(acc) << '\n';
    };
  });

  // ablate-corpus
  fs::path ac_out;
  std::string ac_fractions = "0.5,0.75,0.9", ac_models = "linear_s2v";
  auto* ablate_corpus_cmd = app.add_subcommand("ablate-corpus", "Accuracy as pieces are removed from the corpus");
  pipeline_options(ablate_corpus_cmd);
  ablate_corpus_cmd->add_option("--fractions", ac_fractions, "Removed fractions");
  ablate_corpus_cmd->add_option("--models", ac_models, "Comma-separated model kinds");
  ablate_corpus_cmd->add_option("--output", ac_out, "Table CSV")->required();
  ablate_corpus_cmd->callback([&] {
    action = [&] {
      PipelineInputs inputs;
      PipelineSettings s;
      pipeline_setup(inputs, s);
      std::vector<ModelKind> kinds;
      for (const auto& m : split(ac_models, ',')) kinds.push_back(parse_model_kind(m));
      s.model = kinds.front();
      const auto table = corpus_ablation(inputs, s, parse_reals(ac_fractions), kinds);
      ensure_parent(ac_out);
      std::ofstream out(ac_out);
      write_corpus_ablation_csv(out, table);
      out.close();
      runner.manifest(*ablate_corpus_cmd, ac_out, {pl_meta.string(), pl_names.string(), pl_data.string()},
                      {ac_out.string()});
    };
  });

  // ablate-attributes
  fs::path aa_attr, aa_classes, aa_data, aa_out;
  std::string aa_keep, aa_val = "3";
  std::size_t aa_runs = 10;
  std::vector<std::string> aa_grid;
  auto* ablate_attr = app.add_subcommand("ablate-attributes", "Accuracy as attribute columns are removed");
  ablate_attr->add_option("--attributes", aa_attr, "Class x attribute matrix")->required()->check(CLI::ExistingFile);
  ablate_attr->add_option("--attribute-classes", aa_classes, "Class id of every matrix row")
      ->required()->check(CLI::ExistingFile);
  ablate_attr->add_option("--data-dir", aa_data)->required()->check(CLI::ExistingDirectory);
  ablate_attr->add_option("--keep", aa_keep, "Comma-separated attribute counts (default: full, /2, /4, /8)");
  ablate_attr->add_option("--runs", aa_runs)->check(CLI::PositiveNumber);
  ablate_attr->add_option("--validation", aa_val);
  ablate_attr->add_option("--grid", aa_grid);
  ablate_attr->add_option("--output", aa_out, "keep,mean,std CSV")->required();
  ablate_attr->callback([&] {
    action = [&] {
      PrototypeSet protos;
      protos.matrix = load_matrix(aa_attr);
      protos.class_ids = load_lines(aa_classes);
      if (static_cast<std::size_t>(protos.matrix.rows()) != protos.class_ids.size())
        throw Error("attribute rows and class ids differ in count");
      protos = normalize(std::move(protos), true);
      const auto data = make_dataset(load_visual(VisualFiles::in_directory(aa_data)), protos);
      std::vector<std::size_t> keep;
      if (aa_keep.empty()) {
        for (auto k = static_cast<std::size_t>(data.semantic_dim()); k >= 1 && keep.size() < 4; k /= 2)
          keep.push_back(k);
      } else {
        keep = parse_counts(aa_keep);
      }
      AttributeAblationOptions opt;
      opt.grid = parse_grid(aa_grid);
      opt.validation = parse_validation(aa_val);
      opt.threads = g.threads;
      const auto rows = attribute_ablation(data, keep, aa_runs, g.seed, opt);
      ensure_parent(aa_out);
      std::ofstream out(aa_out);
      write_ablation_csv(out, rows);
      out.close();
      runner.manifest(*ablate_attr, aa_out, {aa_attr.string(), aa_classes.string(), aa_data.string()},
                      {aa_out.string()});
    };
  });

  attach_env(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    action();
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
