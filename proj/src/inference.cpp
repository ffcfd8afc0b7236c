#include "cenet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <unordered_map>

#include "cenet/error.hpp"
#include "cenet/history_index.hpp"

namespace cenet {

std::string to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::none: return "none";
    case MaskMode::hard: return "hard";
    case MaskMode::soft: return "soft";
    case MaskMode::random: return "random";
    case MaskMode::ground_truth: return "gt";
  }
  return "none";
}

MaskMode parse_mask_mode(const std::string& text) {
  if (text == "none") return MaskMode::none;
  if (text == "hard") return MaskMode::hard;
  if (text == "soft") return MaskMode::soft;
  if (text == "random") return MaskMode::random;
  if (text == "gt" || text == "ground-truth") return MaskMode::ground_truth;
  throw ConfigError("unknown mask mode '" + text + "' (expected none, hard, soft, random, gt)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "test";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "valid") return Split::valid;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split '" + text + "' (expected train, valid, test)");
}

MaskVector mask_vector(std::span<const EntityId> history, bool i_hat, std::int64_t entity_count) {
  MaskVector in_history(static_cast<std::size_t>(entity_count), 0);
  for (const auto o : history) {
    if (o < 0 || o >= entity_count) throw BoundsError("mask_vector: entity id out of range");
    in_history[static_cast<std::size_t>(o)] = 1;
  }
  MaskVector mask(in_history.size());
  for (std::size_t o = 0; o < mask.size(); ++o) mask[o] = (in_history[o] != 0) == i_hat ? 1 : 0;
  return mask;
}

std::vector<double> apply_hard_mask(std::span<const double> distribution, std::span<const std::uint8_t> mask) {
  if (distribution.size() != mask.size()) throw ContractError("apply_hard_mask: size mismatch");
  std::vector<double> out(distribution.size());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = mask[o] ? distribution[o] : 0.0;
  return out;
}

std::vector<double> apply_soft_mask(std::span<const double> distribution, std::span<const std::uint8_t> mask) {
  if (distribution.size() != mask.size()) throw ContractError("apply_soft_mask: size mismatch");
  // softmax of a 0/1 vector takes two values: e / Z on ones, 1 / Z on zeros.
  double ones = 0.0;
  for (const auto b : mask) ones += b ? 1.0 : 0.0;
  const double e = std::exp(1.0);
  const double z = ones * e + (static_cast<double>(mask.size()) - ones);
  const double w_in = e / z;
  const double w_out = 1.0 / z;
  std::vector<double> out(distribution.size());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = distribution[o] * (mask[o] ? w_in : w_out);
  return out;
}

std::vector<EntityId> rank_entities(std::span<const double> scores) {
  std::vector<EntityId> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<EntityId>(i);
  std::stable_sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return order;
}

namespace {

bool outranks(std::span<const double> scores, std::size_t other, std::size_t truth) {
  return scores[other] > scores[truth] || (scores[other] == scores[truth] && other < truth);
}

}  // namespace

std::int64_t raw_rank(std::span<const double> scores, EntityId truth) {
  if (truth < 0 || static_cast<std::size_t>(truth) >= scores.size()) throw BoundsError("rank: truth id out of range");
  std::int64_t rank = 1;
  const auto t = static_cast<std::size_t>(truth);
  for (std::size_t o = 0; o < scores.size(); ++o) {
    if (o != t && outranks(scores, o, t)) ++rank;
  }
  return rank;
}

std::int64_t filtered_rank(std::span<const double> scores, EntityId truth, std::span<const EntityId> known_true) {
  std::int64_t rank = raw_rank(scores, truth);
  const auto t = static_cast<std::size_t>(truth);
  std::vector<EntityId> filter(known_true.begin(), known_true.end());
  std::sort(filter.begin(), filter.end());
  filter.erase(std::unique(filter.begin(), filter.end()), filter.end());
  for (const auto o : filter) {
    if (o == truth || o < 0 || static_cast<std::size_t>(o) >= scores.size()) continue;
    if (outranks(scores, static_cast<std::size_t>(o), t)) --rank;
  }
  return rank;
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finaliser over the running hash.
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

}  // namespace

std::vector<Prediction> predict(const Model& model, std::span<const Query> batch, const PredictOptions& options) {
  const auto& params = model.params;
  const auto n = params.shape.entity_count;
  const bool needs_classifier = options.mode == MaskMode::hard || options.mode == MaskMode::soft;
  if (needs_classifier && !model.stage2_done) {
    throw ContractError("mask mode '" + to_string(options.mode) + "' needs a stage-2 classifier; use --mask none");
  }

  const auto scores = score_context(params, batch, model.hyper.lambda, model.hyper.branches);
  const Matrix dist = combined_distribution(scores, model.hyper.branches);
  std::vector<double> probs(batch.size(), 0.5);
  if (model.stage2_done) probs = classifier_probability(params, query_representation(params, batch));

  std::vector<Prediction> out(batch.size());
  for (std::size_t q = 0; q < batch.size(); ++q) {
    auto& pred = out[q];
    const auto& query = batch[q];
    pred.classifier_probability = probs[q];
    pred.i_hat = predicted_label(probs[q]);
    std::vector<double> row(dist.row(static_cast<Eigen::Index>(q)).data(),
                            dist.row(static_cast<Eigen::Index>(q)).data() + n);

    std::vector<EntityId> history;
    for (const auto& [o, c] : query.freq) history.push_back(o);

    MaskVector mask;
    switch (options.mode) {
      case MaskMode::none:
        pred.scores = std::move(row);
        continue;
      case MaskMode::hard:
      case MaskMode::soft:
        mask = mask_vector(history, pred.i_hat, n);
        break;
      case MaskMode::ground_truth:
        mask = mask_vector(history, query.label != 0, n);
        break;
      case MaskMode::random: {
        std::uint64_t h = mix(options.random_seed, static_cast<std::uint64_t>(query.subject));
        h = mix(h, static_cast<std::uint64_t>(query.predicate));
        h = mix(h, static_cast<std::uint64_t>(query.time));
        std::mt19937_64 rng(h);
        mask.resize(static_cast<std::size_t>(n));
        for (auto& b : mask) b = static_cast<std::uint8_t>(rng() & 1u);
        break;
      }
    }

    if (options.mode == MaskMode::soft) {
      pred.scores = apply_soft_mask(row, mask);
    } else if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end()) {
      pred.scores = std::move(row);
      pred.mask_fallback = true;
    } else {
      pred.scores = apply_hard_mask(row, mask);
    }
  }
  return out;
}

std::vector<Quadruple> all_augmented_facts(const Dataset& dataset) {
  std::vector<Quadruple> all;
  for (const auto* split : {&dataset.train, &dataset.valid, &dataset.test}) {
    const auto aug = add_inverse_relations(*split, dataset.vocab.relation_count);
    all.insert(all.end(), aug.begin(), aug.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const Quadruple& a, const Quadruple& b) { return a.time < b.time; });
  return all;
}

namespace {

const std::vector<Quadruple>& split_facts(const Dataset& dataset, Split split) {
  switch (split) {
    case Split::train: return dataset.train;
    case Split::valid: return dataset.valid;
    case Split::test: return dataset.test;
  }
  return dataset.test;
}

// Calls visit(snapshot facts of the split, index holding every fact before the
// snapshot, all facts at the snapshot time) once per split timestamp.
template <typename Visit>
void stream_split(const Dataset& dataset, Split split, bool inverse, Visit&& visit) {
  const auto& raw = split_facts(dataset, split);
  std::vector<Quadruple> eval = inverse ? add_inverse_relations(raw, dataset.vocab.relation_count)
                                        : std::vector<Quadruple>(raw.begin(), raw.end());
  std::stable_sort(eval.begin(), eval.end(), [](const Quadruple& a, const Quadruple& b) { return a.time < b.time; });
  const auto known = all_augmented_facts(dataset);

  HistoryIndex index;
  std::size_t cursor = 0;
  std::size_t begin = 0;
  while (begin < eval.size()) {
    const TimeId t = eval[begin].time;
    std::size_t end = begin;
    while (end < eval.size() && eval[end].time == t) ++end;
    while (cursor < known.size() && known[cursor].time < t) {
      std::size_t stop = cursor;
      while (stop < known.size() && known[stop].time == known[cursor].time) ++stop;
      index.extend(std::span<const Quadruple>(known).subspan(cursor, stop - cursor));
      cursor = stop;
    }
    std::size_t same_end = cursor;
    while (same_end < known.size() && known[same_end].time == t) ++same_end;
    visit(std::span<const Quadruple>(eval).subspan(begin, end - begin), index,
          std::span<const Quadruple>(known).subspan(cursor, same_end - cursor));
    begin = end;
  }
}

struct MetricAccumulator {
  double rr = 0.0;
  std::int64_t h1 = 0, h3 = 0, h10 = 0, count = 0;

  void add(std::int64_t rank) {
    rr += 1.0 / static_cast<double>(rank);
    h1 += rank <= 1;
    h3 += rank <= 3;
    h10 += rank <= 10;
    ++count;
  }
  Metrics finish() const {
    Metrics m;
    m.count = count;
    if (count == 0) return m;
    const double n = static_cast<double>(count);
    m.mrr = 100.0 * rr / n;
    m.hits1 = 100.0 * static_cast<double>(h1) / n;
    m.hits3 = 100.0 * static_cast<double>(h3) / n;
    m.hits10 = 100.0 * static_cast<double>(h10) / n;
    return m;
  }
};

}  // namespace

std::vector<Query> split_queries(const Dataset& dataset, Split split, bool inverse) {
  std::vector<Query> out;
  stream_split(dataset, split, inverse, [&](std::span<const Quadruple> facts, const HistoryIndex& index, auto) {
    auto qs = make_queries(facts, index);
    out.insert(out.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  });
  return out;
}

double new_event_rate(const Dataset& dataset, Split split) {
  const auto queries = split_queries(dataset, split, false);
  if (queries.empty()) return 0.0;
  std::int64_t fresh = 0;
  for (const auto& q : queries) fresh += q.label == 0;
  return 100.0 * static_cast<double>(fresh) / static_cast<double>(queries.size());
}

EvaluationReport evaluate_scorer(const Dataset& dataset, Split split, const ChunkScorer& scorer,
                                 const EvalOptions& options) {
  if (split_facts(dataset, split).empty()) throw ContractError("evaluate: split '" + to_string(split) + "' is empty");
  const auto relations = dataset.vocab.relation_count;
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
  const std::size_t threads = std::max<std::size_t>(1, options.threads);

  EvaluationReport report;
  report.split = split;
  MetricAccumulator all, object, subject, fresh, repeat;
  std::int64_t classified = 0, positive = 0, correct = 0;

  stream_split(dataset, split, true,
               [&](std::span<const Quadruple> facts, const HistoryIndex& index, std::span<const Quadruple> same_time) {
    const auto queries = make_queries(facts, index);
    std::unordered_map<std::uint64_t, std::vector<EntityId>> known;
    for (const auto& f : same_time) {
      const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(f.subject)) << 32) |
                       static_cast<std::uint32_t>(f.predicate);
      known[key].push_back(f.object);
    }

    const std::size_t chunks = (queries.size() + chunk - 1) / chunk;
    std::vector<std::int64_t> ranks(queries.size(), 0);
    std::vector<double> probs(queries.size(), -1.0);
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](std::size_t worker) {
      try {
        std::vector<std::vector<double>> scores;
        std::vector<double> p;
        for (std::size_t c = worker; c < chunks; c += threads) {
          const auto first = c * chunk;
          const auto n = std::min(chunk, queries.size() - first);
          const auto part = std::span<const Query>(queries).subspan(first, n);
          scores.clear();
          p.clear();
          scorer(part, scores, p);
          if (scores.size() != n) throw ContractError("scorer returned the wrong number of rows");
          for (std::size_t i = 0; i < n; ++i) {
            const auto& q = part[i];
            const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(q.subject)) << 32) |
                             static_cast<std::uint32_t>(q.predicate);
            ranks[first + i] = options.raw ? raw_rank(scores[i], q.truth)
                                           : filtered_rank(scores[i], q.truth, known.at(key));
            if (!p.empty()) probs[first + i] = p[i];
          }
        }
      } catch (...) {
        errors[worker] = std::current_exception();
      }
    };
    if (threads == 1 || chunks <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
      for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto& q = queries[i];
      const auto rank = ranks[i];
      report.ranks.push_back(rank);
      all.add(rank);
      (q.predicate < relations ? object : subject).add(rank);
      (q.label ? repeat : fresh).add(rank);
      if (probs[i] >= 0.0) {
        ++classified;
        const bool yes = predicted_label(probs[i]);
        positive += yes;
        correct += yes == (q.label != 0);
      }
    }
  });

  report.all = all.finish();
  report.object = object.finish();
  report.subject = subject.finish();
  report.new_events = fresh.finish();
  report.repeat_events = repeat.finish();
  if (classified > 0) {
    report.classifier_positive_rate = static_cast<double>(positive) / static_cast<double>(classified);
    report.classifier_accuracy = static_cast<double>(correct) / static_cast<double>(classified);
  }
  return report;
}

EvaluationReport evaluate(const Model& model, const Dataset& dataset, Split split, const PredictOptions& predict_options,
                          const EvalOptions& options) {
  if (dataset.vocab.entity_count != model.params.shape.entity_count ||
      dataset.vocab.relation_count != model.params.shape.relation_count) {
    throw ConfigError("vocab mismatch: model expects " + std::to_string(model.params.shape.entity_count) +
                      " entities / " + std::to_string(model.params.shape.relation_count) + " relations, dataset has " +
                      std::to_string(dataset.vocab.entity_count) + " / " +
                      std::to_string(dataset.vocab.relation_count));
  }
  auto scorer = [&](std::span<const Query> chunk, std::vector<std::vector<double>>& scores,
                    std::vector<double>& probs) {
    auto preds = predict(model, chunk, predict_options);
    for (auto& p : preds) {
      scores.push_back(std::move(p.scores));
      if (model.stage2_done) probs.push_back(p.classifier_probability);
    }
  };
  auto report = evaluate_scorer(dataset, split, scorer, options);
  report.mode = predict_options.mode;
  return report;
}

}  // namespace cenet
