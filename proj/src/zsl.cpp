#include "webzsl/zsl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "webzsl/matrix_io.hpp"

namespace webzsl {

void ZslDataset::validate() const {
  if (X.rows() < 1) throw Error("dataset has no training samples");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw Error("feature rows and label count differ");
  if (S_seen.rows() < 1) throw Error("dataset has no seen-class prototypes");
  for (int label : y)
    if (label < 0 || label >= S_seen.rows()) throw Error("training label out of range");
  if (S_unseen.size() > 0 && S_unseen.cols() != S_seen.cols())
    throw Error("seen and unseen prototypes differ in dimension");
  if (X_test.rows() > 0) {
    if (X_test.cols() != X.cols()) throw Error("train and test features differ in dimension");
    if (static_cast<std::size_t>(X_test.rows()) != y_test.size())
      throw Error("test feature rows and label count differ");
    for (int label : y_test)
      if (label < 0 || label >= S_unseen.rows()) throw Error("test label out of range");
  }
  if (!seen_ids.empty() && seen_ids.size() != static_cast<std::size_t>(S_seen.rows()))
    throw Error("seen id list does not match seen prototypes");
  if (!unseen_ids.empty() && unseen_ids.size() != static_cast<std::size_t>(S_unseen.rows()))
    throw Error("unseen id list does not match unseen prototypes");
  std::set<std::string> seen(seen_ids.begin(), seen_ids.end());
  for (const auto& u : unseen_ids)
    if (seen.contains(u)) throw Error("class '" + u + "' is both seen and unseen");
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear_v2s") return ModelKind::linear_v2s;
  if (name == "linear_s2v") return ModelKind::linear_s2v;
  if (name == "eszsl") return ModelKind::eszsl;
  if (name == "conse") return ModelKind::conse;
  if (name == "devise") return ModelKind::devise;
  throw Error("unknown model '" + std::string(name) +
              "' (linear_v2s|linear_s2v|eszsl|conse|devise)");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear_v2s: return "linear_v2s";
    case ModelKind::linear_s2v: return "linear_s2v";
    case ModelKind::eszsl: return "eszsl";
    case ModelKind::conse: return "conse";
    case ModelKind::devise: return "devise";
  }
  return "?";
}

const Eigen::MatrixXd& ZslModel::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw Error(std::string(to_string(kind)) + " model has no parameter '" + name + "'");
  return it->second;
}

namespace {

// Per-class sums of feature rows (C x D) and sample counts.
void class_sums(const ZslDataset& data, Eigen::MatrixXd& sums, Eigen::VectorXd& counts) {
  sums = Eigen::MatrixXd::Zero(data.S_seen.rows(), data.X.cols());
  counts = Eigen::VectorXd::Zero(data.S_seen.rows());
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    sums.row(data.y[static_cast<std::size_t>(i)]) += data.X.row(i);
    counts[data.y[static_cast<std::size_t>(i)]] += 1.0;
  }
}

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out(X.rows(), X.cols() + 1);
  out.leftCols(X.cols()) = X;
  out.col(X.cols()).setOnes();
  return out;
}

void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
}

double largest_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(sym.rows()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = sym * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / n;
    if (std::abs(next - lambda) <= 1e-10 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

void require_dims(const ZslModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& S,
                  Eigen::Index d, Eigen::Index k) {
  if (X.cols() != d)
    throw Error(std::string(to_string(model.kind)) + ": feature dimension " + std::to_string(X.cols()) +
                " does not match the model's " + std::to_string(d));
  if (S.cols() != k)
    throw Error(std::string(to_string(model.kind)) + ": prototype dimension " +
                std::to_string(S.cols()) + " does not match the model's " + std::to_string(k));
}

double hyper_or(const Hyperparameters& h, const std::string& name, double fallback) {
  auto it = h.find(name);
  return it == h.end() ? fallback : it->second;
}

double hyper_required(const Hyperparameters& h, const std::string& name, ModelKind kind) {
  auto it = h.find(name);
  if (it == h.end())
    throw Error(std::string(to_string(kind)) + " needs hyperparameter '" + name + "'");
  return it->second;
}

}  // namespace

ZslModel fit_linear_v2s(const ZslDataset& data, double lambda) {
  data.validate();
  if (lambda < 0) throw Error("lambda must be >= 0");
  Eigen::MatrixXd targets(data.X.rows(), data.S_seen.cols());
  for (Eigen::Index i = 0; i < data.X.rows(); ++i)
    targets.row(i) = data.S_seen.row(data.y[static_cast<std::size_t>(i)]);
  ZslModel m{ModelKind::linear_v2s, {}, {{"lambda", lambda}}};
  m.params["W"] = ridge_solve(data.X, targets, lambda);
  return m;
}

ZslModel fit_linear_s2v(const ZslDataset& data, double lambda) {
  data.validate();
  if (lambda < 0) throw Error("lambda must be >= 0");
  Eigen::MatrixXd sums;
  Eigen::VectorXd counts;
  class_sums(data, sums, counts);
  // Sample rows s_{y_i} repeat per class, so A'A and A'X reduce to class sums.
  const Eigen::MatrixXd gram = data.S_seen.transpose() * counts.asDiagonal() * data.S_seen;
  const Eigen::MatrixXd rhs = data.S_seen.transpose() * sums;
  ZslModel m{ModelKind::linear_s2v, {}, {{"lambda", lambda}}};
  m.params["W"] = solve_regularized(gram, rhs, lambda);
  return m;
}

Eigen::MatrixXd eszsl_labels(const std::vector<int>& y, Eigen::Index classes,
                             LabelEncoding encoding) {
  const double off = encoding == LabelEncoding::plus_minus_one ? -1.0 : 0.0;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(y.size()), classes, off);
  for (std::size_t i = 0; i < y.size(); ++i) Y(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return Y;
}

ZslModel fit_eszsl(const ZslDataset& data, double gamma, double lambda, LabelEncoding encoding) {
  data.validate();
  if (!(gamma > 0) || !(lambda > 0)) throw Error("ESZSL regularizers must be > 0");
  const Eigen::MatrixXd Y = eszsl_labels(data.y, data.S_seen.rows(), encoding);
  const Eigen::MatrixXd& X = data.X;
  const Eigen::MatrixXd& S = data.S_seen;

  Eigen::MatrixXd left;
  if (X.rows() < X.cols()) {
    Eigen::MatrixXd k = X * X.transpose();
    left = X.transpose() * solve_regularized(k, Eigen::MatrixXd(Y * S), gamma);
  } else {
    Eigen::MatrixXd g = X.transpose() * X;
    left = solve_regularized(g, Eigen::MatrixXd(X.transpose() * Y * S), gamma);
  }
  Eigen::MatrixXd sts = S.transpose() * S;
  const Eigen::MatrixXd right = solve_regularized(sts, Eigen::MatrixXd(left.transpose()), lambda);

  ZslModel m{ModelKind::eszsl, {}, {{"gamma", gamma}, {"lambda", lambda}}};
  if (encoding == LabelEncoding::zero_one) m.hyper["zero_one"] = 1.0;
  m.params["V"] = right.transpose();
  return m;
}

double conse_objective(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Xb, const std::vector<int>& y,
                       double reg, Eigen::MatrixXd* grad) {
  const auto n = static_cast<double>(Xb.rows());
  Eigen::MatrixXd logits = Xb * W;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    loss += lse - logits(i, y[static_cast<std::size_t>(i)]);
  }
  loss = loss / n + 0.5 * reg * W.squaredNorm();
  if (grad) {
    softmax_rows(logits);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) logits(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    *grad = Xb.transpose() * logits / n + reg * W;
  }
  return loss;
}

ZslModel fit_conse(const ZslDataset& data, double reg, const ConseOptions& options) {
  data.validate();
  if (reg < 0) throw Error("ConSE regularizer must be >= 0");
  if (options.top_t < 1) throw Error("ConSE T must be >= 1");
  const Eigen::MatrixXd Xb = with_bias(data.X);
  const Eigen::Index classes = data.S_seen.rows();
  const double n = static_cast<double>(Xb.rows());

  // Softmax Hessian is bounded by X'X / (2N) + reg I.
  const double lip = 0.5 * largest_eigenvalue(Xb.transpose() * Xb) / n * 1.05 + reg;
  const double step = 1.0 / lip;
  const double momentum =
      reg > 0 ? (std::sqrt(lip) - std::sqrt(reg)) / (std::sqrt(lip) + std::sqrt(reg)) : -1.0;

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(Xb.cols(), classes);
  Eigen::MatrixXd prev = W, look = W, grad;
  double t = 1.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    conse_objective(look, Xb, data.y, reg, &grad);
    if (grad.cwiseAbs().maxCoeff() < options.tolerance) {
      W = look;
      break;
    }
    prev = W;
    W = look - step * grad;
    double beta = momentum;
    if (beta < 0) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      beta = (t - 1.0) / t_next;
      t = t_next;
    }
    look = W + beta * (W - prev);
  }

  ZslModel m{ModelKind::conse, {}, {{"reg", reg}, {"T", static_cast<double>(options.top_t)}}};
  m.params["W"] = W;
  m.params["seen_prototypes"] = data.S_seen;
  return m;
}

Eigen::MatrixXd conse_probabilities(const ZslModel& model, const Eigen::MatrixXd& X) {
  const auto& W = model.param("W");
  if (X.cols() + 1 != W.rows()) throw Error("conse: feature dimension mismatch");
  Eigen::MatrixXd logits = with_bias(X) * W;
  softmax_rows(logits);
  return logits;
}

Eigen::MatrixXd conse_embed(const ZslModel& model, const Eigen::MatrixXd& X, int top_t) {
  const auto& S = model.param("seen_prototypes");
  const Eigen::MatrixXd P = conse_probabilities(model, X);
  const int t = std::clamp(top_t, 1, static_cast<int>(P.cols()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), S.cols());
  std::vector<int> order(static_cast<std::size_t>(P.cols()));
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + t, order.end(), [&](int a, int b) {
      if (P(i, a) != P(i, b)) return P(i, a) > P(i, b);
      return a < b;
    });
    double z = 0.0;
    for (int r = 0; r < t; ++r) {
      out.row(i) += P(i, order[r]) * S.row(order[r]);
      z += P(i, order[r]);
    }
    out.row(i) /= z;
  }
  return out;
}

Eigen::VectorXd predict_conse(const ZslModel& model, const Eigen::VectorXd& x,
                              const Eigen::MatrixXd& S_unseen, int top_t) {
  const Eigen::MatrixXd emb = conse_embed(model, x.transpose(), top_t);
  return cosine_matrix(emb, S_unseen).row(0).transpose();
}

double devise_hinge(const Eigen::MatrixXd& W, const Eigen::VectorXd& x, const Eigen::VectorXd& s_pos,
                    const Eigen::VectorXd& s_neg, double margin, Eigen::MatrixXd* grad) {
  const Eigen::VectorXd z = W.transpose() * x;
  const double loss = margin - z.dot(s_pos) + z.dot(s_neg);
  if (loss <= 0) {
    if (grad) *grad = Eigen::MatrixXd::Zero(W.rows(), W.cols());
    return 0.0;
  }
  if (grad) *grad = x * (s_neg - s_pos).transpose();
  return loss;
}

ZslModel fit_devise(const ZslDataset& data, const DeviseOptions& options) {
  data.validate();
  if (!(options.margin > 0)) throw Error("DeViSE margin must be > 0");
  if (options.epochs < 0) throw Error("DeViSE epochs must be >= 0");
  const Eigen::Index d = data.X.cols();
  const Eigen::Index k = data.S_seen.cols();
  const Eigen::Index classes = data.S_seen.rows();
  std::mt19937_64 rng(options.seed);

  Eigen::MatrixXd W;
  if (options.initial) {
    W = *options.initial;
    if (W.rows() != d || W.cols() != k) throw Error("DeViSE initial W has the wrong shape");
  } else {
    std::normal_distribution<double> normal(0.0, options.init_scale);
    W.resize(d, k);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = normal(rng);
  }

  std::vector<std::size_t> samples(static_cast<std::size_t>(data.X.rows()));
  std::iota(samples.begin(), samples.end(), 0);
  std::vector<int> others;
  others.reserve(static_cast<std::size_t>(classes));
  Eigen::VectorXd direction(k);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(samples.begin(), samples.end(), rng);
    for (std::size_t i : samples) {
      const int label = data.y[i];
      const auto x = data.X.row(static_cast<Eigen::Index>(i)).transpose();
      const Eigen::VectorXd z = W.transpose() * x;
      const double pos = z.dot(data.S_seen.row(label));

      others.clear();
      for (int c = 0; c < classes; ++c)
        if (c != label) others.push_back(c);
      std::shuffle(others.begin(), others.end(), rng);

      direction.setZero();
      bool violated = false;
      for (int c : others) {
        if (options.margin - pos + z.dot(data.S_seen.row(c)) > 0) {
          direction += (data.S_seen.row(c) - data.S_seen.row(label)).transpose();
          violated = true;
          if (!options.sum_all) break;
        }
      }
      if (violated) W.noalias() -= options.lr * x * direction.transpose();
    }
  }

  ZslModel m{ModelKind::devise, {},
             {{"margin", options.margin}, {"lr", options.lr},
              {"epochs", static_cast<double>(options.epochs)}}};
  m.params["W"] = W;
  return m;
}

ZslModel fit_model(const ZslDataset& data, ModelKind kind, const Hyperparameters& hyper,
                   std::uint64_t seed) {
  switch (kind) {
    case ModelKind::linear_v2s:
      return fit_linear_v2s(data, hyper_required(hyper, "lambda", kind));
    case ModelKind::linear_s2v:
      return fit_linear_s2v(data, hyper_required(hyper, "lambda", kind));
    case ModelKind::eszsl:
      return fit_eszsl(data, hyper_required(hyper, "gamma", kind), hyper_required(hyper, "lambda", kind),
                       hyper_or(hyper, "zero_one", 0.0) != 0.0 ? LabelEncoding::zero_one
                                                               : LabelEncoding::plus_minus_one);
    case ModelKind::conse: {
      ConseOptions opt;
      opt.top_t = static_cast<int>(hyper_or(hyper, "T", opt.top_t));
      return fit_conse(data, hyper_required(hyper, "reg", kind), opt);
    }
    case ModelKind::devise: {
      DeviseOptions opt;
      opt.margin = hyper_or(hyper, "margin", opt.margin);
      opt.lr = hyper_or(hyper, "lr", opt.lr);
      opt.epochs = static_cast<int>(hyper_or(hyper, "epochs", opt.epochs));
      opt.sum_all = hyper_or(hyper, "sum_all", 0.0) != 0.0;
      opt.seed = seed;
      return fit_devise(data, opt);
    }
  }
  throw Error("unhandled model kind");
}

Eigen::MatrixXd score_matrix(const ZslModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& S) {
  switch (model.kind) {
    case ModelKind::linear_v2s: {
      const auto& W = model.param("W");
      require_dims(model, X, S, W.rows(), W.cols());
      return cosine_matrix(Eigen::MatrixXd(X * W), S);
    }
    case ModelKind::linear_s2v: {
      const auto& W = model.param("W");
      require_dims(model, X, S, W.cols(), W.rows());
      return cosine_matrix(X, Eigen::MatrixXd(S * W));
    }
    case ModelKind::eszsl: {
      const auto& V = model.param("V");
      require_dims(model, X, S, V.rows(), V.cols());
      return X * V * S.transpose();
    }
    case ModelKind::conse: {
      const auto& W = model.param("W");
      const auto& seen = model.param("seen_prototypes");
      require_dims(model, X, S, W.rows() - 1, seen.cols());
      const int t = static_cast<int>(hyper_or(model.hyper, "T", 10));
      return cosine_matrix(conse_embed(model, X, t), S);
    }
    case ModelKind::devise: {
      const auto& W = model.param("W");
      require_dims(model, X, S, W.rows(), W.cols());
      return X * W * S.transpose();
    }
  }
  throw Error("unhandled model kind");
}

std::vector<RankedClass> rank_scores(const Eigen::VectorXd& scores) {
  std::vector<RankedClass> ranked(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index c = 0; c < scores.size(); ++c)
    ranked[static_cast<std::size_t>(c)] = {static_cast<int>(c), scores[c]};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedClass& a, const RankedClass& b) { return a.score > b.score; });
  return ranked;
}

std::vector<RankedClass> predict_rank(const ZslModel& model, const Eigen::VectorXd& x,
                                      const Eigen::MatrixXd& S) {
  return rank_scores(score_matrix(model, x.transpose(), S).row(0).transpose());
}

std::vector<std::vector<int>> rank_all(const ZslModel& model, const Eigen::MatrixXd& X,
                                       const Eigen::MatrixXd& S) {
  const Eigen::MatrixXd scores = score_matrix(model, X, S);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (const auto& r : rank_scores(scores.row(i).transpose()))
      out[static_cast<std::size_t>(i)].push_back(r.index);
  }
  return out;
}

std::map<std::string, std::vector<double>> default_grid(ModelKind kind) {
  const std::vector<double> powers{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  switch (kind) {
    case ModelKind::linear_v2s:
    case ModelKind::linear_s2v:
      return {{"lambda", powers}};
    case ModelKind::eszsl:
      return {{"gamma", powers}, {"lambda", powers}};
    case ModelKind::conse:
      return {{"reg", powers}};
    case ModelKind::devise:
      return {{"epochs", {5, 10, 25, 50}}};
  }
  return {};
}

void save_model(const std::filesystem::path& path, const ZslModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model: " + path.string());
  out.precision(17);
  out << "kind " << to_string(model.kind) << '\n';
  for (const auto& [name, value] : model.hyper) out << "hyper " << name << ' ' << value << '\n';
  for (const auto& [name, m] : model.params) {
    out << "param " << name << '\n';
    write_matrix(out, m);
  }
}

ZslModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read model: " + path.string());
  ZslModel m;
  std::string tag;
  bool have_kind = false;
  while (in >> tag) {
    if (tag == "kind") {
      std::string k;
      in >> k;
      m.kind = parse_model_kind(k);
      have_kind = true;
    } else if (tag == "hyper") {
      std::string name;
      double v = 0;
      if (!(in >> name >> v)) throw Error("bad hyperparameter line in " + path.string());
      m.hyper[name] = v;
    } else if (tag == "param") {
      std::string name;
      in >> name;
      long long rows = 0, cols = 0;
      if (!(in >> rows >> cols)) throw Error("bad parameter header in " + path.string());
      Eigen::MatrixXd p(rows, cols);
      for (Eigen::Index i = 0; i < p.size(); ++i)
        if (!(in >> p(i / cols, i % cols))) throw Error("truncated parameter in " + path.string());
      m.params[name] = std::move(p);
    } else {
      throw Error("unexpected '" + tag + "' in model file " + path.string());
    }
  }
  if (!have_kind) throw Error("model file has no kind: " + path.string());
  return m;
}

}  // namespace webzsl
