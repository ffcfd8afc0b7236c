#pragma once

// Mask-based inference and filtered ranking metrics.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cenet/data.hpp"
#include "cenet/model.hpp"

namespace cenet {

enum class MaskMode { none, hard, soft, random, ground_truth };

std::string to_string(MaskMode mode);
/// Accepts none, hard, soft, random, gt / ground-truth. ConfigError otherwise.
MaskMode parse_mask_mode(const std::string& text);

using MaskVector = std::vector<std::uint8_t>;

/// B[o] = 1 iff (o is historical) == i_hat.
MaskVector mask_vector(std::span<const EntityId> history, bool i_hat, std::int64_t entity_count);

/// P[o] * B[o]. No fallback here; see predict().
std::vector<double> apply_hard_mask(std::span<const double> distribution, std::span<const std::uint8_t> mask);
/// P[o] * softmax(B)[o].
std::vector<double> apply_soft_mask(std::span<const double> distribution, std::span<const std::uint8_t> mask);

/// Entity ids by descending score; equal scores rank the lower id first.
std::vector<EntityId> rank_entities(std::span<const double> scores);

/// 1 + number of entities that outrank `truth` (higher score, or equal score
/// and lower id) after dropping every id in `known_true` other than truth.
std::int64_t filtered_rank(std::span<const double> scores, EntityId truth, std::span<const EntityId> known_true);
std::int64_t raw_rank(std::span<const double> scores, EntityId truth);

struct Prediction {
  std::vector<double> scores;
  double classifier_probability = 0.5;
  bool i_hat = false;
  // Hard mask selected nothing, so the unmasked distribution was used.
  bool mask_fallback = false;
};

struct PredictOptions {
  MaskMode mode = MaskMode::soft;
  // Seed of the random-mask ablation; the mask of each query is derived from
  // (seed, s, p, t) so results do not depend on batching.
  std::uint64_t random_seed = 0;
};

/// Scores every query of `batch`. In `ground_truth` mode the query label
/// replaces the classifier output; `random` draws a fair coin per entity.
/// Modes other than none/soft/hard apply their mask as a hard mask.
std::vector<Prediction> predict(const Model& model, std::span<const Query> batch, const PredictOptions& options);

enum class Split { train, valid, test };
std::string to_string(Split split);
Split parse_split(const std::string& text);

struct Metrics {
  // Percentages.
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::int64_t count = 0;
};

struct EvaluationReport {
  Split split = Split::test;
  MaskMode mode = MaskMode::none;
  Metrics all;
  Metrics object;         // original facts
  Metrics subject;        // inverse-relation queries
  Metrics new_events;     // label 0
  Metrics repeat_events;  // label 1
  // Fraction of queries whose classifier output is positive, and how often it
  // matches the label (NaN-free: zero when the classifier is unused).
  double classifier_positive_rate = 0.0;
  double classifier_accuracy = 0.0;
  std::vector<std::int64_t> ranks;  // per query, evaluation order
};

/// Scores a chunk of queries, returning one |E|-wide row per query and,
/// optionally, classifier probabilities.
using ChunkScorer = std::function<void(std::span<const Query> chunk, std::vector<std::vector<double>>& scores,
                                       std::vector<double>& probabilities)>;

struct EvalOptions {
  std::size_t threads = 1;
  // Queries are scored in chunks of this size regardless of thread count.
  std::size_t chunk = 256;
  bool raw = false;  // debug: unfiltered ranks
};

/// Streams the split snapshot by snapshot. Queries at time t see every known
/// fact (all splits, both directions) with timestamp below t; the index is
/// extended after each snapshot. Object and inverse-subject queries are both
/// ranked, filtered against all true facts at the same (s, p, t).
EvaluationReport evaluate_scorer(const Dataset& dataset, Split split, const ChunkScorer& scorer,
                                 const EvalOptions& options = {});

EvaluationReport evaluate(const Model& model, const Dataset& dataset, Split split, const PredictOptions& predict,
                          const EvalOptions& options = {});

/// Queries for one split, labelled against all earlier facts of the dataset.
/// `inverse` adds subject-direction queries.
std::vector<Query> split_queries(const Dataset& dataset, Split split, bool inverse);

/// Percentage of facts in a split whose object never appeared for (s, p)
/// earlier, object direction only.
double new_event_rate(const Dataset& dataset, Split split);

/// Every known fact in all splits with inverse relations, sorted by time.
std::vector<Quadruple> all_augmented_facts(const Dataset& dataset);

}  // namespace cenet
