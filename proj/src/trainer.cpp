#include "cenet/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "cenet/error.hpp"

namespace cenet {

namespace {

// Shuffle stream distinct from the initialisation stream.
std::mt19937_64 shuffle_rng(std::uint64_t seed, std::uint64_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), 0x5eedu};
  return std::mt19937_64(seq);
}

void check_batch(std::int64_t batch) {
  if (batch <= 0) throw ConfigError("batch size must be positive");
}

}  // namespace

std::vector<EpochLoss> train_stage1(Model& model, std::span<const Query> queries, const TrainOptions& options,
                                    const ValidationScore& validation) {
  check_batch(options.batch);
  auto& params = model.params;
  params.store.freeze_all(false);
  for (const auto& name : params.classifier_names()) params.store.set_frozen(name, true);
  params.store.zero_grad();

  const StageOneOptions loss_options{model.hyper.alpha, model.hyper.lambda, model.hyper.tau, model.hyper.branches};
  auto rng = shuffle_rng(model.seed, 1);
  std::vector<std::size_t> order(queries.size());
  std::vector<Query> batch;
  std::vector<EpochLoss> history;
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t stale = 0;

  for (std::int64_t epoch = 1; epoch <= options.epochs1; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss row{epoch, 0.0, 0.0, 0.0};
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(options.batch)) {
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(options.batch));
      batch.clear();
      for (auto i = begin; i < end; ++i) batch.push_back(queries[order[i]]);
      const auto loss = stage1_loss(params, batch, loss_options, true);
      if (!std::isfinite(loss.total)) {
        throw NumericError("stage 1 epoch " + std::to_string(epoch) + ": non-finite loss (ce=" +
                           std::to_string(loss.ce) + ", sup=" + std::to_string(loss.sup) + ")");
      }
      adam_step(params.store, options.adam);
      row.total += loss.total;
      row.ce += loss.ce;
      row.sup += loss.sup;
    }
    history.push_back(row);

    if (options.early_stop_patience > 0 && validation) {
      const double score = validation(model);
      if (score > best) {
        best = score;
        stale = 0;
      } else if (++stale >= options.early_stop_patience) {
        break;
      }
    }
  }
  params.store.freeze_all(false);
  model.stage1_done = true;
  return history;
}

Matrix represent_all(const ModelParams& params, std::span<const Query> queries, std::size_t chunk) {
  Matrix out(static_cast<Eigen::Index>(queries.size()), params.shape.dim);
  for (std::size_t begin = 0; begin < queries.size(); begin += chunk) {
    const auto n = std::min(chunk, queries.size() - begin);
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(n)) =
        query_representation(params, queries.subspan(begin, n));
  }
  return out;
}

std::vector<EpochLoss> fit_classifier(ModelParams& params, const Matrix& features, std::span<const Label> labels,
                                      const TrainOptions& options, std::uint64_t seed) {
  check_batch(options.batch);
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ContractError("fit_classifier: feature and label counts differ");
  }
  params.store.freeze_all(true);
  for (const auto& name : params.classifier_names()) params.store.set_frozen(name, false);
  params.store.zero_grad();

  auto rng = shuffle_rng(seed, 2);
  std::vector<Eigen::Index> order(labels.size());
  std::vector<EpochLoss> history;
  Matrix batch_features;
  std::vector<Label> batch_labels;
  for (std::int64_t epoch = 1; epoch <= options.epochs2; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss row{epoch, 0.0, 0.0, 0.0};
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(options.batch)) {
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(options.batch));
      batch_features.resize(static_cast<Eigen::Index>(end - begin), features.cols());
      batch_labels.clear();
      for (auto i = begin; i < end; ++i) {
        batch_features.row(static_cast<Eigen::Index>(i - begin)) = features.row(order[i]);
        batch_labels.push_back(labels[static_cast<std::size_t>(order[i])]);
      }
      row.total += loss_bce(params, batch_features, batch_labels, true);
      adam_step(params.store, options.adam);
    }
    history.push_back(row);
  }
  params.store.freeze_all(false);
  return history;
}

std::vector<EpochLoss> train_stage2(Model& model, std::span<const Query> queries, const TrainOptions& options) {
  if (!model.stage1_done) throw ContractError("train_stage2: stage 1 has not been run");
  const Matrix features = represent_all(model.params, queries);
  std::vector<Label> labels;
  labels.reserve(queries.size());
  for (const auto& q : queries) labels.push_back(q.label);
  auto history = fit_classifier(model.params, features, labels, options, model.seed);
  model.stage2_done = true;
  return history;
}

}  // namespace cenet
