#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cenet/model.hpp"

namespace cenet {

struct TrainOptions {
  std::int64_t batch = 1024;
  AdamOptions adam;
  std::int64_t epochs1 = 30;
  std::int64_t epochs2 = 20;
  // Stop stage 1 once the validation score has not improved for this many
  // epochs. Zero disables early stopping.
  std::int64_t early_stop_patience = 0;
};

struct EpochLoss {
  std::int64_t epoch = 0;
  double total = 0.0;
  double ce = 0.0;
  double sup = 0.0;
};

/// Higher is better; called after every stage-1 epoch when early stopping is on.
using ValidationScore = std::function<double(const Model&)>;

/// Minibatch Adam over alpha * L_ce + (1 - alpha) * L_sup. Queries are
/// reshuffled across timestamps every epoch from the model seed. The
/// classifier stays frozen. Sets `stage1_done`.
std::vector<EpochLoss> train_stage1(Model& model, std::span<const Query> queries, const TrainOptions& options,
                                    const ValidationScore& validation = {});

/// Freezes everything except the classifier and fits it with binary
/// cross-entropy on the (fixed) query representations. Requires stage 1.
std::vector<EpochLoss> train_stage2(Model& model, std::span<const Query> queries, const TrainOptions& options);

/// Classifier fit on precomputed features; used by train_stage2.
std::vector<EpochLoss> fit_classifier(ModelParams& params, const Matrix& features, std::span<const Label> labels,
                                      const TrainOptions& options, std::uint64_t seed);

/// Query representations for many queries, computed in fixed-size chunks.
Matrix represent_all(const ModelParams& params, std::span<const Query> queries, std::size_t chunk = 1024);

}  // namespace cenet
