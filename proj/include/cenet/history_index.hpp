#pragma once

// Cumulative per-(subject, predicate) object history. A query at time t only
// sees facts with timestamp strictly below t.

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cenet/data.hpp"

namespace cenet {

/// Sparse object -> occurrence count, sorted by object id. Every count is >= 1.
using FrequencyVector = std::vector<std::pair<EntityId, std::uint32_t>>;

class HistoryIndex {
 public:
  HistoryIndex() = default;

  /// Builds the index from time-sorted facts (ContractError otherwise).
  static HistoryIndex build(std::span<const Quadruple> quads);

  /// Appends one snapshot. All facts must share a timestamp strictly greater
  /// than anything already indexed. An empty snapshot is a no-op.
  void extend(std::span<const Quadruple> snapshot);

  FrequencyVector frequencies_at(EntityId subject, RelationId predicate, TimeId time) const;
  std::vector<EntityId> historical_entities_at(EntityId subject, RelationId predicate, TimeId time) const;

  std::optional<TimeId> last_time() const { return last_time_; }
  std::size_t fact_count() const { return fact_count_; }

 private:
  struct Checkpoint {
    TimeId time;
    EntityId object;
  };
  static std::uint64_t key(EntityId s, RelationId p) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) | static_cast<std::uint32_t>(p);
  }
  std::span<const Checkpoint> prefix(EntityId subject, RelationId predicate, TimeId time) const;

  // Each checkpoint adds +1 to its object's count from `time` on.
  std::unordered_map<std::uint64_t, std::vector<Checkpoint>> series_;
  std::optional<TimeId> last_time_;
  std::size_t fact_count_ = 0;
};

/// +lambda where the count is positive, -lambda elsewhere.
std::vector<double> z_transform(const FrequencyVector& freq, double lambda, std::int64_t entity_count);

/// True iff `truth` is a historical entity of (s, p) before t.
bool label_query(const HistoryIndex& index, EntityId subject, RelationId predicate, TimeId time, EntityId truth);

bool contains(const FrequencyVector& freq, EntityId entity);

}  // namespace cenet
