#pragma once

// Temporal knowledge graph datasets: quadruple files, vocabularies, inverse
// relations and per-timestamp snapshots.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cenet {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using TimeId = std::int64_t;

struct Quadruple {
  EntityId subject = 0;
  RelationId predicate = 0;
  EntityId object = 0;
  TimeId time = 0;

  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

struct Vocab {
  std::int64_t entity_count = 0;
  // Relation count before inverse augmentation.
  std::int64_t relation_count = 0;
  // Optional; either empty or sized to the matching count.
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
};

struct Dataset {
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;
  Vocab vocab;
  // Raw timestamp value for each dense time id.
  std::vector<std::int64_t> raw_times;
  std::string granularity_note;
};

struct LoadedQuadruples {
  std::vector<Quadruple> quads;
  Vocab vocab;
};

/// Parses a tab-separated `s p o t` file. Lines may carry extra fields, which
/// are ignored. The result is stably sorted by timestamp. When `vocab` is
/// given every id is checked against it (BoundsError); otherwise the vocab is
/// inferred as max id + 1.
LoadedQuadruples load_quadruples(const std::filesystem::path& path,
                                 const std::optional<Vocab>& vocab = std::nullopt);

void write_quadruples(const std::filesystem::path& path, std::span<const Quadruple> quads);

/// Appends (o, p + relation_count, s, t) for every input fact. Every predicate
/// must be below relation_count, so a second application is rejected.
std::vector<Quadruple> add_inverse_relations(std::span<const Quadruple> quads,
                                             std::int64_t relation_count);

struct Snapshot {
  TimeId time = 0;
  std::vector<Quadruple> quads;
};

/// Groups time-sorted facts by timestamp. Throws ContractError on unsorted input.
std::vector<Snapshot> snapshots(std::span<const Quadruple> quads);

bool is_time_sorted(std::span<const Quadruple> quads);

/// Loads `train.txt`, `valid.txt`, `test.txt` from a directory, plus the optional
/// `stat.txt`, `entity2id.txt` and `relation2id.txt` sidecars. Timestamps are
/// remapped to dense ordinals shared by all three splits. A missing valid or
/// test file yields an empty split.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the dataset back in the same layout (dense time ids, `stat.txt`).
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Non-fatal dataset warnings, e.g. train facts later than the first test fact.
std::vector<std::string> validate_dataset(const Dataset& dataset);

}  // namespace cenet
