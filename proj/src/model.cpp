#include "cenet/model.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>

#include <json.hpp>

#include "cenet/error.hpp"

namespace cenet {

std::string to_string(Branches b) {
  switch (b) {
    case Branches::both: return "both";
    case Branches::historical_only: return "his-only";
    case Branches::nonhistorical_only: return "nhis-only";
  }
  return "both";
}

Branches parse_branches(const std::string& text) {
  if (text == "both") return Branches::both;
  if (text == "his-only") return Branches::historical_only;
  if (text == "nhis-only") return Branches::nonhistorical_only;
  throw ConfigError("unknown branch setting '" + text + "' (expected both, his-only, nhis-only)");
}

ModelParams::ModelParams(ModelShape s) : shape(s) {
  if (s.entity_count <= 0 || s.relation_count <= 0 || s.dim <= 0) {
    throw ContractError("model shape must be positive (|E|, |R|, d)");
  }
  register_all();
}

void ModelParams::register_all() {
  const auto n = shape.entity_count;
  const auto r = 2 * shape.relation_count;
  const auto d = shape.dim;
  entity = store.add("entity_embedding", Matrix::Zero(n, d));
  relation = store.add("relation_embedding", Matrix::Zero(r, d));
  his_weight = store.add("his.weight", Matrix::Zero(d, 2 * d));
  his_bias = store.add("his.bias", Matrix::Zero(1, d));
  nhis_weight = store.add("nhis.weight", Matrix::Zero(d, 2 * d));
  nhis_bias = store.add("nhis.bias", Matrix::Zero(1, d));
  freq_weight = store.add("freq.weight", Matrix::Zero(d, n));
  mlp_w1 = store.add("query_mlp.0.weight", Matrix::Zero(d, 3 * d));
  mlp_b1 = store.add("query_mlp.0.bias", Matrix::Zero(1, d));
  mlp_w2 = store.add("query_mlp.1.weight", Matrix::Zero(d, d));
  mlp_b2 = store.add("query_mlp.1.bias", Matrix::Zero(1, d));
  cls_weight = store.add("classifier.weight", Matrix::Zero(1, d));
  cls_bias = store.add("classifier.bias", Matrix::Zero(1, 1));
}

ModelParams::ModelParams(ModelShape s, std::uint64_t seed) : ModelParams(s) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(s.dim));
  for (const auto slot : {entity, relation, his_weight, nhis_weight, freq_weight, mlp_w1, mlp_w2, cls_weight}) {
    init_uniform(store[slot].value, bound, rng);
  }
}

ModelParams ModelParams::zeros(ModelShape s) { return ModelParams(s); }

std::vector<std::string> ModelParams::encoder_names() const {
  std::vector<std::string> names;
  for (const auto& p : store) {
    if (p.name.rfind("classifier.", 0) != 0) names.push_back(p.name);
  }
  return names;
}

std::vector<std::string> ModelParams::classifier_names() const { return {"classifier.weight", "classifier.bias"}; }

std::vector<Query> make_queries(std::span<const Quadruple> facts, const HistoryIndex& index) {
  std::vector<Query> out;
  out.reserve(facts.size());
  for (const auto& f : facts) {
    Query q{f.subject, f.predicate, f.time, f.object, index.frequencies_at(f.subject, f.predicate, f.time), 0};
    q.label = contains(q.freq, q.truth) ? 1 : 0;
    out.push_back(std::move(q));
  }
  return out;
}

namespace {

std::vector<EntityId> subjects_of(std::span<const Query> batch) {
  std::vector<EntityId> ids;
  ids.reserve(batch.size());
  for (const auto& q : batch) ids.push_back(q.subject);
  return ids;
}

std::vector<RelationId> relations_of(std::span<const Query> batch) {
  std::vector<RelationId> ids;
  ids.reserve(batch.size());
  for (const auto& q : batch) ids.push_back(q.predicate);
  return ids;
}

std::vector<EntityId> truths_of(std::span<const Query> batch) {
  std::vector<EntityId> ids;
  ids.reserve(batch.size());
  for (const auto& q : batch) ids.push_back(q.truth);
  return ids;
}

std::vector<Label> labels_of(std::span<const Query> batch) {
  std::vector<Label> out;
  out.reserve(batch.size());
  for (const auto& q : batch) out.push_back(q.label);
  return out;
}

// s ++ p for every query, B x 2d.
Matrix query_pair(const ModelParams& params, std::span<const Query> batch) {
  const auto s = ops::gather_rows(params.value(params.entity), subjects_of(batch));
  const auto p = ops::gather_rows(params.value(params.relation), relations_of(batch));
  const Matrix* parts[] = {&s, &p};
  return ops::concat_cols(parts);
}

struct BranchForward {
  Matrix activation;  // tanh(W x + b), B x d
  Matrix scores;      // activation E^T +- Z
};

BranchForward branch_forward(const ModelParams& params, const Matrix& pair, std::span<const Query> batch,
                             std::size_t weight, std::size_t bias, double signed_lambda) {
  BranchForward out;
  out.activation =
      ops::tanh(ops::add_row_bias(ops::matmul_nt(pair, params.value(weight)), params.value(bias)));
  out.scores = ops::matmul_nt(out.activation, params.value(params.entity));
  add_copy_term(out.scores, batch, signed_lambda);
  return out;
}

void branch_backward(ModelParams& params, const Matrix& pair, const BranchForward& fwd, const Matrix& d_scores,
                     std::size_t weight, std::size_t bias, Matrix& d_pair) {
  // scores = A E^T (+ constant copy term)
  Matrix d_act = ops::matmul(d_scores, params.value(params.entity));
  params.grad(params.entity).noalias() += d_scores.transpose() * fwd.activation;
  const Matrix d_pre = ops::tanh_backward(fwd.activation, d_act);
  params.grad(weight).noalias() += d_pre.transpose() * pair;
  params.grad(bias) += ops::add_row_bias_backward(d_pre);
  d_pair.noalias() += d_pre * params.value(weight);
}

void scatter_pair_grad(ModelParams& params, std::span<const Query> batch, const Matrix& d_pair) {
  const auto d = params.shape.dim;
  ops::scatter_add_rows(params.grad(params.entity), subjects_of(batch), d_pair.leftCols(d));
  ops::scatter_add_rows(params.grad(params.relation), relations_of(batch), d_pair.rightCols(d));
}

void check_ids(const ModelParams& params, std::span<const Query> batch) {
  for (const auto& q : batch) {
    if (q.subject < 0 || q.subject >= params.shape.entity_count || q.truth < 0 ||
        q.truth >= params.shape.entity_count) {
      throw BoundsError("query entity id outside [0, " + std::to_string(params.shape.entity_count) + ")");
    }
    if (q.predicate < 0 || q.predicate >= 2 * params.shape.relation_count) {
      throw BoundsError("query relation id outside [0, " + std::to_string(2 * params.shape.relation_count) + ")");
    }
    for (const auto& [o, c] : q.freq) {
      if (o < 0 || o >= params.shape.entity_count) throw BoundsError("history entity id out of range");
    }
  }
}

}  // namespace

void add_copy_term(Matrix& scores, std::span<const Query> batch, double signed_lambda) {
  if (scores.rows() != static_cast<Eigen::Index>(batch.size())) throw ContractError("add_copy_term: batch mismatch");
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const auto& freq = batch[static_cast<std::size_t>(r)].freq;
    auto row = scores.row(r);
    // Historical entries get +signed_lambda, the rest -signed_lambda; each
    // entry is written as a single rounded sum sim + z.
    std::size_t next = 0;
    for (Eigen::Index o = 0; o < row.cols(); ++o) {
      const bool historical = next < freq.size() && freq[next].first == o;
      if (historical) ++next;
      row(o) += historical ? signed_lambda : -signed_lambda;
    }
  }
}

Matrix score_historical(const ModelParams& params, std::span<const Query> batch, double lambda) {
  check_ids(params, batch);
  const auto pair = query_pair(params, batch);
  return branch_forward(params, pair, batch, params.his_weight, params.his_bias, lambda).scores;
}

Matrix score_nonhistorical(const ModelParams& params, std::span<const Query> batch, double lambda) {
  check_ids(params, batch);
  const auto pair = query_pair(params, batch);
  return branch_forward(params, pair, batch, params.nhis_weight, params.nhis_bias, -lambda).scores;
}

ContextScores score_context(const ModelParams& params, std::span<const Query> batch, double lambda,
                            Branches branches) {
  check_ids(params, batch);
  const auto pair = query_pair(params, batch);
  ContextScores out;
  if (branches != Branches::nonhistorical_only) {
    out.his = branch_forward(params, pair, batch, params.his_weight, params.his_bias, lambda).scores;
  }
  if (branches != Branches::historical_only) {
    out.nhis = branch_forward(params, pair, batch, params.nhis_weight, params.nhis_bias, -lambda).scores;
  }
  return out;
}

double loss_ce(const ContextScores& scores, std::span<const EntityId> truth, Branches branches,
               ContextScores* grad) {
  const bool use_his = branches != Branches::nonhistorical_only;
  const bool use_nhis = branches != Branches::historical_only;
  const Matrix& ref = use_his ? scores.his : scores.nhis;
  if (use_his && use_nhis && (scores.his.rows() != scores.nhis.rows() || scores.his.cols() != scores.nhis.cols())) {
    throw ContractError("loss_ce: branch shapes differ");
  }
  if (ref.rows() != static_cast<Eigen::Index>(truth.size())) throw ContractError("loss_ce: batch size mismatch");

  Matrix s1 = use_his ? ops::softmax_rows(scores.his) : Matrix();
  Matrix s2 = use_nhis ? ops::softmax_rows(scores.nhis) : Matrix();
  double loss = 0.0;
  for (Eigen::Index q = 0; q < ref.rows(); ++q) {
    const auto o = truth[static_cast<std::size_t>(q)];
    if (o < 0 || o >= ref.cols()) throw BoundsError("loss_ce: truth id out of range");
    const double p1 = use_his ? s1(q, o) : 0.0;
    const double p2 = use_nhis ? s2(q, o) : 0.0;
    const double r = p1 + p2;
    if (!(r > 0.0)) throw NumericError("loss_ce: probability of the truth underflowed to zero");
    loss -= std::log(r);
    if (grad) {
      // d/dH_b(j) of -log r = (p_b / r) (S_b(j) - [j == o])
      if (use_his) {
        s1.row(q) *= p1 / r;
        s1(q, o) -= p1 / r;
      }
      if (use_nhis) {
        s2.row(q) *= p2 / r;
        s2(q, o) -= p2 / r;
      }
    }
  }
  ops::check_finite(loss, "loss_ce");
  if (grad) {
    grad->his = use_his ? std::move(s1) : Matrix();
    grad->nhis = use_nhis ? std::move(s2) : Matrix();
  }
  return loss;
}

Matrix combined_distribution(const ContextScores& scores, Branches branches) {
  if (branches == Branches::historical_only) return ops::softmax_rows(scores.his);
  if (branches == Branches::nonhistorical_only) return ops::softmax_rows(scores.nhis);
  if (scores.his.rows() != scores.nhis.rows() || scores.his.cols() != scores.nhis.cols()) {
    throw ContractError("combined_distribution: branch shapes differ");
  }
  Matrix p = 0.5 * (ops::softmax_rows(scores.his) + ops::softmax_rows(scores.nhis));
  return p;
}

QueryEncoding encode_queries(const ModelParams& params, std::span<const Query> batch) {
  check_ids(params, batch);
  const auto d = params.shape.dim;
  const auto b = static_cast<Eigen::Index>(batch.size());
  QueryEncoding enc;
  enc.subject = ops::gather_rows(params.value(params.entity), subjects_of(batch));
  enc.relation = ops::gather_rows(params.value(params.relation), relations_of(batch));

  // W_F F with sparse F: sum of count-weighted columns.
  const auto& wf = params.value(params.freq_weight);
  Matrix freq_pre = Matrix::Zero(b, d);
  for (Eigen::Index q = 0; q < b; ++q) {
    for (const auto& [o, c] : batch[static_cast<std::size_t>(q)].freq) {
      freq_pre.row(q) += static_cast<double>(c) * wf.col(o).transpose();
    }
  }
  enc.freq_act = ops::tanh(freq_pre);

  const Matrix* parts[] = {&enc.subject, &enc.relation, &enc.freq_act};
  const Matrix input = ops::concat_cols(parts);
  enc.hidden = ops::tanh(ops::add_row_bias(ops::matmul_nt(input, params.value(params.mlp_w1)), params.value(params.mlp_b1)));
  enc.projected = ops::add_row_bias(ops::matmul_nt(enc.hidden, params.value(params.mlp_w2)), params.value(params.mlp_b2));
  enc.v = ops::l2_normalize_rows(enc.projected);
  return enc;
}

Matrix query_representation(const ModelParams& params, std::span<const Query> batch) {
  return encode_queries(params, batch).v;
}

namespace {

void encoder_backward(ModelParams& params, std::span<const Query> batch, const QueryEncoding& enc,
                      const Matrix& d_v) {
  const auto d = params.shape.dim;
  const Matrix d_proj = ops::l2_normalize_rows_backward(enc.projected, enc.v, d_v);
  params.grad(params.mlp_w2).noalias() += d_proj.transpose() * enc.hidden;
  params.grad(params.mlp_b2) += ops::add_row_bias_backward(d_proj);
  const Matrix d_hidden = ops::matmul(d_proj, params.value(params.mlp_w2));
  const Matrix d_pre1 = ops::tanh_backward(enc.hidden, d_hidden);

  const Matrix* parts[] = {&enc.subject, &enc.relation, &enc.freq_act};
  const Matrix input = ops::concat_cols(parts);
  params.grad(params.mlp_w1).noalias() += d_pre1.transpose() * input;
  params.grad(params.mlp_b1) += ops::add_row_bias_backward(d_pre1);
  const Matrix d_input = ops::matmul(d_pre1, params.value(params.mlp_w1));

  ops::scatter_add_rows(params.grad(params.entity), subjects_of(batch), d_input.leftCols(d));
  ops::scatter_add_rows(params.grad(params.relation), relations_of(batch), d_input.middleCols(d, d));
  const Matrix d_freq_pre = ops::tanh_backward(enc.freq_act, d_input.rightCols(d));
  auto& d_wf = params.grad(params.freq_weight);
  for (Eigen::Index q = 0; q < d_freq_pre.rows(); ++q) {
    for (const auto& [o, c] : batch[static_cast<std::size_t>(q)].freq) {
      d_wf.col(o) += static_cast<double>(c) * d_freq_pre.row(q).transpose();
    }
  }
}

}  // namespace

std::vector<std::size_t> positive_set(std::span<const Label> labels, std::size_t q) {
  if (q >= labels.size()) throw ContractError("positive_set: query index outside the batch");
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (m != q && labels[m] == labels[q]) out.push_back(m);
  }
  return out;
}

double loss_supcon(const Matrix& v, std::span<const Label> labels, double tau, Matrix* d_v) {
  if (tau <= 0.0) throw ContractError("loss_supcon: temperature must be positive");
  const auto b = v.rows();
  if (static_cast<Eigen::Index>(labels.size()) != b) throw ContractError("loss_supcon: label count mismatch");
  if (d_v) d_v->setZero(v.rows(), v.cols());
  if (b < 2) return 0.0;

  const Matrix logits = (v * v.transpose()) / tau;
  Matrix g = Matrix::Zero(b, b);  // d loss / d logits
  double loss = 0.0;
  for (Eigen::Index q = 0; q < b; ++q) {
    const auto positives = positive_set(labels, static_cast<std::size_t>(q));
    if (positives.empty()) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < b; ++a) {
      if (a != q) mx = std::max(mx, logits(q, a));
    }
    double denom = 0.0;
    for (Eigen::Index a = 0; a < b; ++a) {
      if (a != q) denom += std::exp(logits(q, a) - mx);
    }
    const double lse = mx + std::log(denom);
    const double inv = 1.0 / static_cast<double>(positives.size());
    double pos_sum = 0.0;
    for (const auto k : positives) pos_sum += logits(q, static_cast<Eigen::Index>(k));
    loss += lse - inv * pos_sum;
    if (d_v) {
      for (Eigen::Index a = 0; a < b; ++a) {
        if (a != q) g(q, a) = std::exp(logits(q, a) - lse);
      }
      for (const auto k : positives) g(q, static_cast<Eigen::Index>(k)) -= inv;
    }
  }
  ops::check_finite(loss, "loss_supcon");
  if (d_v) d_v->noalias() = ((g + g.transpose()) * v) / tau;
  return loss;
}

double loss_total(double ce, double sup, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("loss_total: alpha must lie in [0, 1]");
  return alpha * ce + (1.0 - alpha) * sup;
}

std::vector<double> classifier_probability(const ModelParams& params, const Matrix& v) {
  const Matrix logits = ops::add_row_bias(ops::matmul_nt(v, params.value(params.cls_weight)),
                                          params.value(params.cls_bias).row(0));
  const Matrix p = ops::sigmoid(logits);
  return {p.data(), p.data() + p.size()};
}

double loss_bce(ModelParams& params, const Matrix& v, std::span<const Label> labels, bool accumulate) {
  if (static_cast<Eigen::Index>(labels.size()) != v.rows()) throw ContractError("loss_bce: label count mismatch");
  const auto& w = params.value(params.cls_weight);
  const double bias = params.value(params.cls_bias)(0, 0);
  double loss = 0.0;
  Matrix d_logit(v.rows(), 1);
  for (Eigen::Index q = 0; q < v.rows(); ++q) {
    const double z = v.row(q).dot(w.row(0)) + bias;
    const double y = labels[static_cast<std::size_t>(q)] ? 1.0 : 0.0;
    // log(1 + e^z) - y z, evaluated without overflow.
    loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    d_logit(q, 0) = p - y;
  }
  ops::check_finite(loss, "loss_bce");
  if (accumulate) {
    params.grad(params.cls_weight).noalias() += d_logit.transpose() * v;
    params.grad(params.cls_bias)(0, 0) += d_logit.sum();
  }
  return loss;
}

LossBreakdown stage1_loss(ModelParams& params, std::span<const Query> batch, const StageOneOptions& options,
                          bool accumulate) {
  check_ids(params, batch);
  LossBreakdown out;
  const auto branches = options.branches;
  const bool use_his = branches != Branches::nonhistorical_only;
  const bool use_nhis = branches != Branches::historical_only;

  const auto pair = query_pair(params, batch);
  BranchForward his, nhis;
  ContextScores scores;
  if (use_his) {
    his = branch_forward(params, pair, batch, params.his_weight, params.his_bias, options.lambda);
    scores.his = his.scores;
  }
  if (use_nhis) {
    nhis = branch_forward(params, pair, batch, params.nhis_weight, params.nhis_bias, -options.lambda);
    scores.nhis = nhis.scores;
  }
  const auto truth = truths_of(batch);
  ContextScores d_scores;
  const bool ce_grad = accumulate && options.alpha > 0.0;
  out.ce = loss_ce(scores, truth, branches, ce_grad ? &d_scores : nullptr);

  if (ce_grad) {
    Matrix d_pair = Matrix::Zero(pair.rows(), pair.cols());
    if (use_his) {
      d_scores.his *= options.alpha;
      branch_backward(params, pair, his, d_scores.his, params.his_weight, params.his_bias, d_pair);
    }
    if (use_nhis) {
      d_scores.nhis *= options.alpha;
      branch_backward(params, pair, nhis, d_scores.nhis, params.nhis_weight, params.nhis_bias, d_pair);
    }
    scatter_pair_grad(params, batch, d_pair);
  }

  if (options.alpha < 1.0) {
    const auto enc = encode_queries(params, batch);
    const auto labels = labels_of(batch);
    Matrix d_v;
    out.sup = loss_supcon(enc.v, labels, options.tau, accumulate ? &d_v : nullptr);
    if (accumulate) {
      d_v *= (1.0 - options.alpha);
      encoder_backward(params, batch, enc, d_v);
    }
  }
  out.total = loss_total(out.ce, out.sup, options.alpha);
  ops::check_finite(out.total, "stage-1 loss");
  return out;
}

Model make_model(ModelShape shape, const Hyper& hyper, std::uint64_t seed) {
  Model m{ModelParams(shape, seed), hyper, seed, false, false};
  return m;
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'E', 'N', 'E', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated checkpoint header");
  return v;
}

}  // namespace

std::filesystem::path metadata_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".json");
  return p;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put(out, kCheckpointVersion);
    put(out, model.params.shape.entity_count);
    put(out, model.params.shape.relation_count);
    put(out, model.params.shape.dim);
    put(out, model.hyper.alpha);
    put(out, model.hyper.lambda);
    put(out, model.hyper.tau);
    put(out, static_cast<std::uint8_t>(model.hyper.branches));
    put(out, model.seed);
    put(out, static_cast<std::uint8_t>(model.stage1_done));
    put(out, static_cast<std::uint8_t>(model.stage2_done));
    write_params(out, model.params.store);
    if (!out) throw IoError("failed writing checkpoint " + path.string());
  }
  nlohmann::ordered_json meta;
  meta["format_version"] = kCheckpointVersion;
  meta["dim"] = model.params.shape.dim;
  meta["entity_count"] = model.params.shape.entity_count;
  meta["relation_count"] = model.params.shape.relation_count;
  meta["alpha"] = model.hyper.alpha;
  meta["lambda"] = model.hyper.lambda;
  meta["tau"] = model.hyper.tau;
  meta["branches"] = to_string(model.hyper.branches);
  meta["seed"] = model.seed;
  meta["stage1_done"] = model.stage1_done;
  meta["stage2_done"] = model.stage2_done;
  std::ofstream side(metadata_path(path));
  if (!side) throw IoError("cannot write " + metadata_path(path).string());
  side << meta.dump(2) << '\n';
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ParseError(path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  ModelShape shape;
  shape.entity_count = get<std::int64_t>(in);
  shape.relation_count = get<std::int64_t>(in);
  shape.dim = get<std::int64_t>(in);
  Hyper hyper;
  hyper.alpha = get<double>(in);
  hyper.lambda = get<double>(in);
  hyper.tau = get<double>(in);
  const auto branches = get<std::uint8_t>(in);
  if (branches > 2) throw ParseError("corrupt checkpoint branch flag");
  hyper.branches = static_cast<Branches>(branches);
  const auto seed = get<std::uint64_t>(in);
  const bool s1 = get<std::uint8_t>(in) != 0;
  const bool s2 = get<std::uint8_t>(in) != 0;

  Model model{ModelParams::zeros(shape), hyper, seed, s1, s2};
  auto stored = read_params(in);
  if (stored.size() != model.params.store.size()) throw ParseError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < stored.size(); ++i) {
    auto& dst = model.params.store[i];
    auto& src = stored[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() || src.value.cols() != dst.value.cols()) {
      throw ParseError("checkpoint parameter " + src.name + " does not match the model layout");
    }
    dst.value = std::move(src.value);
    dst.m = std::move(src.m);
    dst.v = std::move(src.v);
    dst.step = src.step;
    dst.frozen = src.frozen;
  }
  return model;
}

}  // namespace cenet
