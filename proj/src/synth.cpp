#include "cenet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "cenet/error.hpp"

namespace cenet {

namespace {

using Triple = std::tuple<EntityId, RelationId, EntityId>;

void validate(const SynthSpec& s) {
  if (s.entity_count < 2 || s.relation_count < 1 || s.timestamp_count < 1 || s.quads_per_snapshot < 1) {
    throw GenerationError("synth: counts must be positive (at least two entities)");
  }
  if (!(s.repeat_probability >= 0.0 && s.repeat_probability <= 1.0)) {
    throw GenerationError("synth: repeat probability must lie in [0, 1]");
  }
  if (s.new_event_signal && s.relation_count < 3) {
    throw GenerationError("synth: the new-event regime needs at least three relations");
  }
  if (s.walk_length < 0 || s.walk_length > s.entity_count) {
    throw GenerationError("synth: walk length must lie in [0, entity count]");
  }
  if (s.train_fraction <= 0.0 || s.valid_fraction < 0.0 || s.train_fraction + s.valid_fraction > 1.0) {
    throw GenerationError("synth: split fractions must satisfy 0 < train, 0 <= valid, train + valid <= 1");
  }
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const auto n = spec.entity_count;
  const auto relations = spec.relation_count;
  // Relations 0 (walk) and 1 (catalog) are reserved in the new-event regime.
  const RelationId first_free = spec.new_event_signal ? 2 : 0;
  const std::int64_t walk_length = spec.walk_length > 0 ? spec.walk_length : n;
  const auto free_relations = relations - first_free;

  std::uniform_int_distribution<EntityId> pick_entity(0, static_cast<EntityId>(n - 1));
  std::uniform_int_distribution<RelationId> pick_relation(first_free, static_cast<RelationId>(relations - 1));

  std::vector<EntityId> walk_start(static_cast<std::size_t>(n));
  std::iota(walk_start.begin(), walk_start.end(), EntityId{0});
  std::shuffle(walk_start.begin(), walk_start.end(), rng);
  std::vector<std::int64_t> walk_step(static_cast<std::size_t>(n), 0);
  std::vector<EntityId> walkers;  // subjects with steps left
  if (spec.new_event_signal) {
    walkers.resize(static_cast<std::size_t>(n));
    std::iota(walkers.begin(), walkers.end(), EntityId{0});
  }

  SynthResult result;
  std::set<Triple> emitted;             // every triple so far, any snapshot
  std::vector<Triple> repeatable;       // earlier-snapshot facts eligible for copying
  std::vector<Triple> current;          // facts of the snapshot being built
  const std::int64_t max_fresh_attempts = 64 * n * n * relations + 1024;

  auto emit = [&](TimeId t, const Triple& tr, bool fresh) {
    result.stream.push_back({std::get<0>(tr), std::get<1>(tr), std::get<2>(tr), t});
    result.is_new.push_back(fresh ? 1 : 0);
    current.push_back(tr);
  };

  // Warm-up: a partial matching per relation.
  {
    const auto per_relation_cap = n;
    if (spec.quads_per_snapshot > per_relation_cap * free_relations) {
      throw GenerationError("synth: warm-up snapshot needs more facts than distinct (s, p) pairs allow");
    }
    std::vector<std::vector<EntityId>> subjects(static_cast<std::size_t>(relations));
    std::vector<std::vector<EntityId>> objects(static_cast<std::size_t>(relations));
    for (auto r = first_free; r < relations; ++r) {
      auto& s = subjects[static_cast<std::size_t>(r)];
      auto& o = objects[static_cast<std::size_t>(r)];
      s.resize(static_cast<std::size_t>(n));
      o.resize(static_cast<std::size_t>(n));
      std::iota(s.begin(), s.end(), EntityId{0});
      std::iota(o.begin(), o.end(), EntityId{0});
      std::shuffle(s.begin(), s.end(), rng);
      std::shuffle(o.begin(), o.end(), rng);
    }
    std::vector<std::size_t> used(static_cast<std::size_t>(relations), 0);
    for (std::int64_t i = 0; i < spec.quads_per_snapshot; ++i) {
      const auto r = static_cast<RelationId>(first_free + i % free_relations);
      auto& k = used[static_cast<std::size_t>(r)];
      const auto s = subjects[static_cast<std::size_t>(r)][k];
      const auto o = objects[static_cast<std::size_t>(r)][k];
      ++k;
      const Triple tr{s, r, o};
      emitted.insert(tr);
      emit(0, tr, true);
    }
    if (spec.new_event_signal) {
      for (EntityId s = 0; s < n; ++s) {
        for (std::int64_t j = 0; j < walk_length; ++j) {
          const Triple tr{s, 1, static_cast<EntityId>((walk_start[static_cast<std::size_t>(s)] + j) % n)};
          emitted.insert(tr);
          emit(0, tr, true);
        }
      }
    }
  }

  std::int64_t after_warmup = 0;
  std::int64_t fresh_after_warmup = 0;
  for (TimeId t = 1; t < spec.timestamp_count; ++t) {
    repeatable.insert(repeatable.end(), current.begin(), current.end());
    current.clear();
    for (std::int64_t i = 0; i < spec.quads_per_snapshot; ++i) {
      const bool repeat = !repeatable.empty() && coin(rng) < spec.repeat_probability;
      if (repeat) {
        std::uniform_int_distribution<std::size_t> pick(0, repeatable.size() - 1);
        emit(t, repeatable[pick(rng)], false);
      } else if (spec.new_event_signal) {
        if (walkers.empty()) throw GenerationError("synth: every walk is exhausted at timestamp " + std::to_string(t));
        std::uniform_int_distribution<std::size_t> pick(0, walkers.size() - 1);
        const auto slot = pick(rng);
        const auto s = walkers[slot];
        auto& step = walk_step[static_cast<std::size_t>(s)];
        const auto o = static_cast<EntityId>((walk_start[static_cast<std::size_t>(s)] + step) % n);
        if (++step == walk_length) walkers.erase(walkers.begin() + static_cast<std::ptrdiff_t>(slot));
        const Triple tr{s, 0, o};
        emitted.insert(tr);
        // Relation-0 facts never become repeat candidates.
        result.stream.push_back({s, 0, o, t});
        result.is_new.push_back(1);
      } else {
        bool placed = false;
        for (std::int64_t attempt = 0; attempt < max_fresh_attempts; ++attempt) {
          const Triple tr{pick_entity(rng), pick_relation(rng), pick_entity(rng)};
          if (emitted.insert(tr).second) {
            emit(t, tr, true);
            placed = true;
            break;
          }
        }
        if (!placed) throw GenerationError("synth: fresh triples exhausted at timestamp " + std::to_string(t));
      }
      ++after_warmup;
      fresh_after_warmup += result.is_new.back();
    }
  }
  if (after_warmup > 0) {
    result.new_event_rate = 100.0 * static_cast<double>(fresh_after_warmup) / static_cast<double>(after_warmup);
  }

  // Time-based split.
  const auto t_count = spec.timestamp_count;
  auto train_end = static_cast<TimeId>(std::llround(spec.train_fraction * static_cast<double>(t_count)));
  auto valid_end = static_cast<TimeId>(
      std::llround((spec.train_fraction + spec.valid_fraction) * static_cast<double>(t_count)));
  train_end = std::clamp<TimeId>(train_end, 1, t_count);
  valid_end = std::clamp<TimeId>(valid_end, train_end, t_count);
  auto& ds = result.dataset;
  ds.vocab.entity_count = n;
  ds.vocab.relation_count = relations;
  for (TimeId t = 0; t < t_count; ++t) ds.raw_times.push_back(t);
  ds.granularity_note = "synthetic";
  for (const auto& q : result.stream) {
    if (q.time < train_end) {
      ds.train.push_back(q);
    } else if (q.time < valid_end) {
      ds.valid.push_back(q);
    } else {
      ds.test.push_back(q);
    }
  }
  return result;
}

}  // namespace cenet
