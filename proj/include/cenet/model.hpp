#pragma once

// Forward passes, losses and their gradients for the contrastive event
// network: the historical / non-historical context scorers with the +-lambda
// copy term, the query encoder used for supervised contrastive learning, and
// the binary classifier that predicts whether the answer is a historical
// entity.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cenet/data.hpp"
#include "cenet/history_index.hpp"
#include "cenet/param_store.hpp"
#include "cenet/tensor.hpp"

namespace cenet {

using Label = std::uint8_t;

struct ModelShape {
  std::int64_t entity_count = 0;
  // Before inverse augmentation; the relation table holds 2x this many rows.
  std::int64_t relation_count = 0;
  std::int64_t dim = 200;
};

enum class Branches { both, historical_only, nonhistorical_only };

std::string to_string(Branches b);
Branches parse_branches(const std::string& text);

struct ModelParams {
  /// Embeddings and weight matrices uniform in [-1/sqrt(d), 1/sqrt(d)], biases zero.
  ModelParams(ModelShape shape, std::uint64_t seed);
  /// Every parameter zero.
  static ModelParams zeros(ModelShape shape);

  ModelShape shape;
  ParamStore store;

  // Slots into `store`.
  std::size_t entity = 0;       // |E| x d
  std::size_t relation = 0;     // 2|R| x d
  std::size_t his_weight = 0;   // d x 2d
  std::size_t his_bias = 0;     // 1 x d
  std::size_t nhis_weight = 0;  // d x 2d
  std::size_t nhis_bias = 0;    // 1 x d
  std::size_t freq_weight = 0;  // d x |E|
  std::size_t mlp_w1 = 0;       // d x 3d
  std::size_t mlp_b1 = 0;       // 1 x d
  std::size_t mlp_w2 = 0;       // d x d
  std::size_t mlp_b2 = 0;       // 1 x d
  std::size_t cls_weight = 0;   // 1 x d
  std::size_t cls_bias = 0;     // 1 x 1

  const Matrix& value(std::size_t slot) const { return store[slot].value; }
  Matrix& value(std::size_t slot) { return store[slot].value; }
  Matrix& grad(std::size_t slot) { return store[slot].grad; }

  /// Names of everything trained in stage 1 (all but the classifier).
  std::vector<std::string> encoder_names() const;
  std::vector<std::string> classifier_names() const;

 private:
  explicit ModelParams(ModelShape shape);
  void register_all();
};

/// One query (s, p, ?, t) with its ground-truth object, history counts and
/// the label "truth is a historical entity".
struct Query {
  EntityId subject = 0;
  RelationId predicate = 0;
  TimeId time = 0;
  EntityId truth = 0;
  FrequencyVector freq;
  Label label = 0;
};

/// Builds labelled queries for every fact, looking history up in `index`.
std::vector<Query> make_queries(std::span<const Quadruple> facts, const HistoryIndex& index);

struct ContextScores {
  // batch x |E| each; a dropped branch is left empty.
  Matrix his;
  Matrix nhis;
};

/// tanh(W_his (s ++ p) + b_his) E^T + Z
Matrix score_historical(const ModelParams& params, std::span<const Query> batch, double lambda);
/// tanh(W_nhis (s ++ p) + b_nhis) E^T - Z
Matrix score_nonhistorical(const ModelParams& params, std::span<const Query> batch, double lambda);
ContextScores score_context(const ModelParams& params, std::span<const Query> batch, double lambda,
                            Branches branches);

/// Adds `signed_lambda` at historical entities and subtracts it elsewhere.
void add_copy_term(Matrix& scores, std::span<const Query> batch, double signed_lambda);

/// -sum_q log(softmax(his)[truth] + softmax(nhis)[truth]). With a single
/// branch only that branch's term is used. When `grad` is given it receives
/// d loss / d scores.
double loss_ce(const ContextScores& scores, std::span<const EntityId> truth, Branches branches,
               ContextScores* grad = nullptr);

/// (softmax(his) + softmax(nhis)) / 2, or the single active branch's softmax.
Matrix combined_distribution(const ContextScores& scores, Branches branches);

// Intermediate values of the query encoder, kept for the backward pass.
struct QueryEncoding {
  Matrix subject;     // B x d
  Matrix relation;    // B x d
  Matrix freq_act;    // tanh(W_F F), B x d
  Matrix hidden;      // tanh(W1 [s p f] + b1)
  Matrix projected;   // W2 hidden + b2
  Matrix v;           // unit rows
};

QueryEncoding encode_queries(const ModelParams& params, std::span<const Query> batch);
/// Unit-norm query representations, batch x d.
Matrix query_representation(const ModelParams& params, std::span<const Query> batch);

/// Indices m != q with labels[m] == labels[q].
std::vector<std::size_t> positive_set(std::span<const Label> labels, std::size_t q);

/// Supervised contrastive loss over unit rows of `v`. Queries without
/// positives contribute zero; fewer than two rows gives zero.
double loss_supcon(const Matrix& v, std::span<const Label> labels, double tau, Matrix* d_v = nullptr);

/// alpha * ce + (1 - alpha) * sup, alpha in [0, 1].
double loss_total(double ce, double sup, double alpha);

/// sigmoid(w . v + b) per row.
std::vector<double> classifier_probability(const ModelParams& params, const Matrix& v);
/// Probability 0.5 counts as positive.
inline bool predicted_label(double probability) { return probability >= 0.5; }

/// Summed binary cross-entropy of the classifier on fixed features; adds the
/// classifier gradients to the store when `accumulate` is set.
double loss_bce(ModelParams& params, const Matrix& v, std::span<const Label> labels, bool accumulate);

struct StageOneOptions {
  double alpha = 0.2;
  double lambda = 2.0;
  double tau = 0.1;
  Branches branches = Branches::both;
};

struct LossBreakdown {
  double total = 0.0;
  double ce = 0.0;
  double sup = 0.0;
};

/// Stage-1 objective on one minibatch. With `accumulate` set, gradients of
/// `total` are added into every parameter's grad buffer.
LossBreakdown stage1_loss(ModelParams& params, std::span<const Query> batch, const StageOneOptions& options,
                          bool accumulate);

struct Hyper {
  double alpha = 0.2;
  double lambda = 2.0;
  double tau = 0.1;
  Branches branches = Branches::both;
};

struct Model {
  ModelParams params;
  Hyper hyper;
  std::uint64_t seed = 0;
  bool stage1_done = false;
  bool stage2_done = false;
};

Model make_model(ModelShape shape, const Hyper& hyper, std::uint64_t seed);

/// Writes the binary checkpoint and a JSON sidecar next to it (`.json`).
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);
std::filesystem::path metadata_path(const std::filesystem::path& checkpoint);

}  // namespace cenet
