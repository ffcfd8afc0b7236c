#pragma once

// Synthetic temporal KGs with a controllable mix of repeated and new events.
//
// Snapshot 0 is a warm-up: for every relation its facts use distinct subjects
// and distinct objects, so each (s, p) and (o, p) has a single answer. Every
// later fact is, with probability `repeat_probability`, a copy of a uniformly
// chosen fact from an earlier snapshot, and otherwise a fresh triple that has
// never been emitted.
//
// With `new_event_signal` the fresh facts all use relation 0, and relation 0
// never repeats: the j-th fact of subject s is (s, 0, (perm(s) + j) mod |E|)
// for a fixed seeded permutation perm and j < walk length. The warm-up also
// lists every subject's walk under relation 1 (the catalog), which then
// repeats like any other fact. A relation-0 answer is always new for (s, 0)
// but is the first catalog entry of s not yet visited, so a scorer finds it
// by discounting historical entities; boosting them points at visited ones.

#include <cstdint>
#include <vector>

#include "cenet/data.hpp"

namespace cenet {

struct SynthSpec {
  std::int64_t entity_count = 50;
  std::int64_t relation_count = 5;
  std::int64_t timestamp_count = 40;
  std::int64_t quads_per_snapshot = 25;
  double repeat_probability = 0.6;
  bool new_event_signal = false;
  // Steps per subject in the new-event regime; 0 means the entity count.
  std::int64_t walk_length = 0;
  std::uint64_t seed = 0;
  // Timestamp fractions for the train and valid splits; test takes the rest.
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
};

struct SynthResult {
  Dataset dataset;
  // Full stream in emission order with the generator's own new-event flag.
  std::vector<Quadruple> stream;
  std::vector<std::uint8_t> is_new;
  // Percentage of new facts after the warm-up snapshot.
  double new_event_rate = 0.0;
};

/// GenerationError on an infeasible spec (non-positive counts, probability
/// outside [0, 1], exhausted fresh facts).
SynthResult generate(const SynthSpec& spec);

}  // namespace cenet
