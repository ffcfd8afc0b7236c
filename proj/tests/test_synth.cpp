#include <doctest.h>

#include <map>
#include <set>

#include "cenet/error.hpp"
#include "cenet/history_index.hpp"
#include "cenet/synth.hpp"

using namespace cenet;

namespace {

std::vector<std::uint8_t> labels_from_index(const SynthResult& r) {
  HistoryIndex index;
  std::vector<std::uint8_t> labels;
  for (const auto& snap : snapshots(r.stream)) {
    for (const auto& f : snap.quads) labels.push_back(label_query(index, f.subject, f.predicate, f.time, f.object));
    index.extend(snap.quads);
  }
  return labels;
}

}  // namespace

TEST_CASE("labels recomputed from the stream match the generator") {
  for (bool signal : {false, true}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SynthSpec spec;
      spec.seed = seed;
      spec.new_event_signal = signal;
      const auto r = generate(spec);
      const auto labels = labels_from_index(r);
      REQUIRE(labels.size() == r.is_new.size());
      for (std::size_t i = 0; i < labels.size(); ++i) CHECK(labels[i] == 1 - r.is_new[i]);
    }
  }
}

TEST_CASE("repeat probability one repeats everything after the warm-up") {
  SynthSpec spec;
  spec.repeat_probability = 1.0;
  const auto r = generate(spec);
  const auto labels = labels_from_index(r);
  for (std::size_t i = 0; i < r.stream.size(); ++i) {
    if (r.stream[i].time > 0) CHECK(labels[i] == 1);
  }
  CHECK(r.new_event_rate == 0.0);
}

TEST_CASE("repeat probability zero makes every later fact new") {
  SynthSpec spec;
  spec.repeat_probability = 0.0;
  const auto r = generate(spec);
  CHECK(r.new_event_rate == 100.0);
}

TEST_CASE("default mix yields about forty percent new events") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const auto r = generate(spec);
    CHECK(r.new_event_rate >= 35.0);
    CHECK(r.new_event_rate <= 45.0);
  }
}

TEST_CASE("warm-up gives each relation a one-to-one matching") {
  SynthSpec spec;
  spec.seed = 4;
  const auto r = generate(spec);
  std::map<RelationId, std::set<EntityId>> subjects, objects;
  std::size_t warm = 0;
  for (const auto& f : r.stream) {
    if (f.time != 0) continue;
    ++warm;
    CHECK(subjects[f.predicate].insert(f.subject).second);
    CHECK(objects[f.predicate].insert(f.object).second);
  }
  CHECK(warm == 25);
}

TEST_CASE("new-event signal walks each subject through fresh objects") {
  SynthSpec spec;
  spec.new_event_signal = true;
  spec.seed = 2;
  const auto r = generate(spec);
  std::map<EntityId, std::vector<EntityId>> walks;
  for (std::size_t i = 0; i < r.stream.size(); ++i) {
    const auto& f = r.stream[i];
    if (f.predicate != 0) continue;
    CHECK(f.time > 0);
    CHECK(r.is_new[i] == 1);
    walks[f.subject].push_back(f.object);
  }
  CHECK(!walks.empty());
  for (const auto& [s, w] : walks) {
    for (std::size_t j = 1; j < w.size(); ++j) CHECK(w[j] == (w[j - 1] + 1) % 50);
  }
}

TEST_CASE("the catalog lists each walk in order and walks stop at their length") {
  SynthSpec spec;
  spec.new_event_signal = true;
  spec.walk_length = 6;
  spec.entity_count = 40;
  spec.timestamp_count = 20;
  spec.quads_per_snapshot = 12;
  spec.seed = 3;
  const auto r = generate(spec);
  std::map<EntityId, std::vector<EntityId>> catalog, walks;
  for (const auto& f : r.stream) {
    if (f.predicate == 1 && f.time == 0) catalog[f.subject].push_back(f.object);
    if (f.predicate == 0) walks[f.subject].push_back(f.object);
  }
  CHECK(catalog.size() == 40);
  for (const auto& [s, c] : catalog) {
    REQUIRE(c.size() == 6);
    for (std::size_t j = 1; j < c.size(); ++j) CHECK(c[j] == (c[j - 1] + 1) % 40);
    const auto& w = walks[s];
    CHECK(w.size() <= 6);
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(w[j] == c[j]);
  }
  const auto labels = labels_from_index(r);
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(labels[i] == 1 - r.is_new[i]);

  spec.walk_length = 1;
  spec.repeat_probability = 0.0;
  CHECK_THROWS_AS(generate(spec), GenerationError);
}

TEST_CASE("generation is reproducible and splits by time") {
  SynthSpec spec;
  spec.seed = 9;
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(a.stream == b.stream);
  CHECK(a.dataset.train.back().time < a.dataset.valid.front().time);
  CHECK(a.dataset.valid.back().time < a.dataset.test.front().time);
  CHECK(a.dataset.train.size() + a.dataset.valid.size() + a.dataset.test.size() == 1000);
  spec.seed = 10;
  CHECK(generate(spec).stream != a.stream);
}

TEST_CASE("infeasible specs are generation errors") {
  SynthSpec spec;
  spec.entity_count = 2;
  spec.relation_count = 1;
  spec.quads_per_snapshot = 2;
  spec.timestamp_count = 10;
  spec.repeat_probability = 0.0;
  CHECK_THROWS_AS(generate(spec), GenerationError);

  SynthSpec bad;
  bad.repeat_probability = 1.5;
  CHECK_THROWS_AS(generate(bad), GenerationError);
  bad = SynthSpec{};
  bad.entity_count = 0;
  CHECK_THROWS_AS(generate(bad), GenerationError);
  bad = SynthSpec{};
  bad.quads_per_snapshot = 300;
  CHECK_THROWS_AS(generate(bad), GenerationError);
  bad = SynthSpec{};
  bad.new_event_signal = true;
  bad.relation_count = 2;
  CHECK_THROWS_AS(generate(bad), GenerationError);
  bad.relation_count = 5;
  bad.walk_length = 51;
  CHECK_THROWS_AS(generate(bad), GenerationError);
}
