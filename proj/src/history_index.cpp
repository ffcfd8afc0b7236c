#include "cenet/history_index.hpp"

#include <algorithm>

#include "cenet/error.hpp"

namespace cenet {

HistoryIndex HistoryIndex::build(std::span<const Quadruple> quads) {
  if (!is_time_sorted(quads)) throw ContractError("build_index: facts are not sorted by timestamp");
  HistoryIndex index;
  std::size_t begin = 0;
  while (begin < quads.size()) {
    std::size_t end = begin;
    while (end < quads.size() && quads[end].time == quads[begin].time) ++end;
    index.extend(quads.subspan(begin, end - begin));
    begin = end;
  }
  return index;
}

void HistoryIndex::extend(std::span<const Quadruple> snapshot) {
  if (snapshot.empty()) return;
  const TimeId t = snapshot.front().time;
  if (last_time_ && t <= *last_time_) {
    throw ContractError("extend_index: snapshot time " + std::to_string(t) + " is not after indexed time " +
                        std::to_string(*last_time_));
  }
  for (const auto& q : snapshot) {
    if (q.time != t) throw ContractError("extend_index: snapshot mixes timestamps");
  }
  for (const auto& q : snapshot) {
    series_[key(q.subject, q.predicate)].push_back({t, q.object});
  }
  fact_count_ += snapshot.size();
  last_time_ = t;
}

std::span<const HistoryIndex::Checkpoint> HistoryIndex::prefix(EntityId subject, RelationId predicate,
                                                               TimeId time) const {
  const auto it = series_.find(key(subject, predicate));
  if (it == series_.end()) return {};
  const auto& list = it->second;
  const auto end = std::lower_bound(list.begin(), list.end(), time,
                                    [](const Checkpoint& c, TimeId t) { return c.time < t; });
  return {list.data(), static_cast<std::size_t>(end - list.begin())};
}

FrequencyVector HistoryIndex::frequencies_at(EntityId subject, RelationId predicate, TimeId time) const {
  const auto events = prefix(subject, predicate, time);
  std::vector<EntityId> objects;
  objects.reserve(events.size());
  for (const auto& c : events) objects.push_back(c.object);
  std::sort(objects.begin(), objects.end());
  FrequencyVector freq;
  for (const auto o : objects) {
    if (!freq.empty() && freq.back().first == o) {
      ++freq.back().second;
    } else {
      freq.emplace_back(o, 1u);
    }
  }
  return freq;
}

std::vector<EntityId> HistoryIndex::historical_entities_at(EntityId subject, RelationId predicate,
                                                           TimeId time) const {
  std::vector<EntityId> out;
  for (const auto& [o, count] : frequencies_at(subject, predicate, time)) out.push_back(o);
  return out;
}

std::vector<double> z_transform(const FrequencyVector& freq, double lambda, std::int64_t entity_count) {
  std::vector<double> z(static_cast<std::size_t>(entity_count), -lambda);
  for (const auto& [o, count] : freq) {
    if (o < 0 || o >= entity_count) throw BoundsError("z_transform: entity id out of range");
    if (count > 0) z[static_cast<std::size_t>(o)] = lambda;
  }
  return z;
}

bool contains(const FrequencyVector& freq, EntityId entity) {
  const auto it = std::lower_bound(freq.begin(), freq.end(), entity,
                                   [](const auto& entry, EntityId e) { return entry.first < e; });
  return it != freq.end() && it->first == entity;
}

bool label_query(const HistoryIndex& index, EntityId subject, RelationId predicate, TimeId time, EntityId truth) {
  return contains(index.frequencies_at(subject, predicate, time), truth);
}

}  // namespace cenet
