#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "webzsl/linalg.hpp"

namespace webzsl {

// Training samples of seen classes plus, optionally, test samples of unseen
// classes. Labels index rows of the matching prototype matrix.
struct ZslDataset {
  Eigen::MatrixXd X;        // N x D
  std::vector<int> y;       // into S_seen
  Eigen::MatrixXd S_seen;   // C_s x K
  Eigen::MatrixXd S_unseen; // C_u x K
  std::vector<std::string> seen_ids;
  std::vector<std::string> unseen_ids;
  Eigen::MatrixXd X_test;   // M x D
  std::vector<int> y_test;  // into S_unseen

  Eigen::Index feature_dim() const { return X.cols(); }
  Eigen::Index semantic_dim() const { return S_seen.cols(); }
  // Throws on inconsistent shapes, labels out of range or overlapping splits.
  void validate() const;
};

enum class ModelKind { linear_v2s, linear_s2v, eszsl, conse, devise };

ModelKind parse_model_kind(std::string_view name);
const char* to_string(ModelKind kind);

using Hyperparameters = std::map<std::string, double>;

struct ZslModel {
  ModelKind kind = ModelKind::linear_s2v;
  std::map<std::string, Eigen::MatrixXd> params;
  Hyperparameters hyper;

  const Eigen::MatrixXd& param(const std::string& name) const;
};

// W (D x K) minimizing sum ||W'x_i - s_{y_i}||^2 + lambda ||W||^2.
// Score: cos(W'x, s).
ZslModel fit_linear_v2s(const ZslDataset& data, double lambda);

// W (K x D) minimizing sum ||W's_{y_i} - x_i||^2 + lambda ||W||^2.
// Score: cos(x, W's).
ZslModel fit_linear_s2v(const ZslDataset& data, double lambda);

enum class LabelEncoding { plus_minus_one, zero_one };

// V = (X'X + gamma I)^-1 X'Y S (S'S + lambda I)^-1. Score: x'Vs.
ZslModel fit_eszsl(const ZslDataset& data, double gamma, double lambda,
                   LabelEncoding encoding = LabelEncoding::plus_minus_one);

// Label matrix used by fit_eszsl (N x C_s).
Eigen::MatrixXd eszsl_labels(const std::vector<int>& y, Eigen::Index classes,
                             LabelEncoding encoding);

struct ConseOptions {
  int top_t = 10;
  int max_iterations = 5000;
  double tolerance = 1e-8;  // on the gradient's max-abs entry
};

// L2-regularized multinomial logistic regression over seen classes, fitted by
// accelerated full-batch gradient descent. Parameters: W ((D+1) x C_s, last
// row is the bias) and the seen prototypes used for embedding.
ZslModel fit_conse(const ZslDataset& data, double reg, const ConseOptions& options = {});

// Mean logistic loss + reg/2 ||W||^2 and its gradient; exposed for testing.
double conse_objective(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, const std::vector<int>& y,
                       double reg, Eigen::MatrixXd* grad = nullptr);

// Class probabilities (rows: samples).
Eigen::MatrixXd conse_probabilities(const ZslModel& model, const Eigen::MatrixXd& X);

// Convex combination of the top-T seen prototypes, weighted by probability.
Eigen::MatrixXd conse_embed(const ZslModel& model, const Eigen::MatrixXd& X, int top_t);

// Cosine of the ConSE embedding of x against every unseen prototype. T is
// clamped to the number of seen classes.
Eigen::VectorXd predict_conse(const ZslModel& model, const Eigen::VectorXd& x,
                              const Eigen::MatrixXd& S_unseen, int top_t);

struct DeviseOptions {
  double margin = 0.1;
  double lr = 0.001;
  int epochs = 10;
  std::uint64_t seed = 1;
  bool sum_all = false;        // false: stop each sweep at the first violator
  double init_scale = 0.001;   // std-dev of the Gaussian initialization
  std::optional<Eigen::MatrixXd> initial;  // overrides the random initialization
};

// W (D x K) trained by SGD on the hinge rank loss. Score: x'Ws.
ZslModel fit_devise(const ZslDataset& data, const DeviseOptions& options);

// max(0, margin - x'W s_pos + x'W s_neg) and its gradient w.r.t. W.
double devise_hinge(const Eigen::MatrixXd& W, const Eigen::VectorXd& x, const Eigen::VectorXd& s_pos,
                    const Eigen::VectorXd& s_neg, double margin, Eigen::MatrixXd* grad = nullptr);

// Dispatch on kind with hyperparameters by name: lambda (linear models),
// gamma/lambda (eszsl), reg/T (conse), margin/lr/epochs (devise).
ZslModel fit_model(const ZslDataset& data, ModelKind kind, const Hyperparameters& hyper,
                   std::uint64_t seed = 1);

// f(x_i, s_c) for every sample row of X and prototype row of S.
Eigen::MatrixXd score_matrix(const ZslModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& S);

struct RankedClass {
  int index;
  double score;
};

// Classes by descending score; ties go to the lower class index.
std::vector<RankedClass> rank_scores(const Eigen::VectorXd& scores);
std::vector<RankedClass> predict_rank(const ZslModel& model, const Eigen::VectorXd& x,
                                      const Eigen::MatrixXd& S);
std::vector<std::vector<int>> rank_all(const ZslModel& model, const Eigen::MatrixXd& X,
                                       const Eigen::MatrixXd& S);

// Default search grid for a model kind: powers of ten in [1e-3, 1e3] for
// every regularizer.
std::map<std::string, std::vector<double>> default_grid(ModelKind kind);

using ValidationClasses = std::variant<std::size_t, std::vector<std::string>>;

struct CvResult {
  Hyperparameters best;
  double best_accuracy = 0.0;
  std::vector<std::pair<Hyperparameters, double>> table;  // grid order
  std::vector<std::string> validation_classes;
  ZslModel model;  // refit on all seen classes with `best`
};

// Holds out validation classes among the seen ones, fits every grid point on
// the rest and scores top-1 on the held-out classes. Ties go to the earliest
// point with each list visited in ascending order (smallest regularizer).
CvResult cross_validate(const ZslDataset& data, ModelKind kind,
                        const std::map<std::string, std::vector<double>>& grid,
                        const ValidationClasses& validation, std::uint64_t seed, int threads = 1);

// Seen-class indices held out for validation.
std::vector<int> choose_validation_classes(const ZslDataset& data, const ValidationClasses& validation,
                                           std::uint64_t seed);

// Splits `data` into a fit part and a validation part (validation classes play
// the unseen role).
ZslDataset validation_split(const ZslDataset& data, const std::vector<int>& validation_classes);

void save_model(const std::filesystem::path& path, const ZslModel& model);
ZslModel load_model(const std::filesystem::path& path);

}  // namespace webzsl
