#include "cenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "cenet/error.hpp"

namespace cenet {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const auto tab = line.find('\t', pos);
    const auto end = tab == std::string_view::npos ? line.size() : tab;
    fields.push_back(line.substr(pos, end - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view text, std::int64_t& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::vector<std::string> read_names(const std::filesystem::path& path, std::int64_t count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> names(static_cast<std::size_t>(count));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::int64_t id = 0;
    if (fields.size() < 2 || !parse_int(fields[1], id)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected name<TAB>id");
    }
    if (id < 0 || id >= count) {
      throw BoundsError(path.string() + ":" + std::to_string(line_no) + ": id " +
                        std::to_string(id) + " outside [0, " + std::to_string(count) + ")");
    }
    names[static_cast<std::size_t>(id)] = std::string(fields[0]);
  }
  return names;
}

}  // namespace

LoadedQuadruples load_quadruples(const std::filesystem::path& path, const std::optional<Vocab>& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  LoadedQuadruples result;
  if (vocab) result.vocab = *vocab;

  std::int64_t max_entity = -1;
  std::int64_t max_relation = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::int64_t v[4];
    bool ok = fields.size() >= 4;
    for (int i = 0; ok && i < 4; ++i) ok = parse_int(fields[static_cast<std::size_t>(i)], v[i]);
    if (!ok || v[0] < 0 || v[1] < 0 || v[2] < 0 || v[3] < 0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected four non-negative tab-separated integers s p o t");
    }
    if (vocab) {
      if (v[0] >= vocab->entity_count || v[2] >= vocab->entity_count) {
        throw BoundsError(path.string() + ":" + std::to_string(line_no) + ": entity id outside [0, " +
                          std::to_string(vocab->entity_count) + ")");
      }
      if (v[1] >= vocab->relation_count) {
        throw BoundsError(path.string() + ":" + std::to_string(line_no) + ": relation id outside [0, " +
                          std::to_string(vocab->relation_count) + ")");
      }
    }
    max_entity = std::max({max_entity, v[0], v[2]});
    max_relation = std::max(max_relation, v[1]);
    result.quads.push_back({static_cast<EntityId>(v[0]), static_cast<RelationId>(v[1]),
                            static_cast<EntityId>(v[2]), v[3]});
  }

  if (!vocab) {
    result.vocab.entity_count = max_entity + 1;
    result.vocab.relation_count = max_relation + 1;
  }
  std::stable_sort(result.quads.begin(), result.quads.end(),
                   [](const Quadruple& a, const Quadruple& b) { return a.time < b.time; });
  return result;
}

void write_quadruples(const std::filesystem::path& path, std::span<const Quadruple> quads) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& q : quads) {
    out << q.subject << '\t' << q.predicate << '\t' << q.object << '\t' << q.time << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Quadruple> add_inverse_relations(std::span<const Quadruple> quads, std::int64_t relation_count) {
  std::vector<Quadruple> out;
  out.reserve(quads.size() * 2);
  for (const auto& q : quads) {
    if (q.predicate < 0 || q.predicate >= relation_count) {
      throw ContractError("add_inverse_relations: predicate " + std::to_string(q.predicate) +
                          " not below relation count " + std::to_string(relation_count) +
                          " (already augmented?)");
    }
    out.push_back(q);
  }
  for (const auto& q : quads) {
    out.push_back({q.object, static_cast<RelationId>(q.predicate + relation_count), q.subject, q.time});
  }
  return out;
}

bool is_time_sorted(std::span<const Quadruple> quads) {
  return std::is_sorted(quads.begin(), quads.end(),
                        [](const Quadruple& a, const Quadruple& b) { return a.time < b.time; });
}

std::vector<Snapshot> snapshots(std::span<const Quadruple> quads) {
  if (!is_time_sorted(quads)) throw ContractError("snapshots: input is not sorted by timestamp");
  std::vector<Snapshot> groups;
  for (const auto& q : quads) {
    if (groups.empty() || groups.back().time != q.time) groups.push_back({q.time, {}});
    groups.back().quads.push_back(q);
  }
  return groups;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());

  std::optional<Vocab> declared;
  if (fs::exists(dir / "stat.txt")) {
    std::ifstream in(dir / "stat.txt");
    std::int64_t e = 0, r = 0;
    if (!(in >> e >> r) || e <= 0 || r <= 0) throw ParseError((dir / "stat.txt").string() + ": expected |E| |R|");
    declared = Vocab{e, r, {}, {}};
  }

  Dataset ds;
  auto load_split = [&](const char* name) -> LoadedQuadruples {
    const auto path = dir / name;
    if (!fs::exists(path)) return {};
    return load_quadruples(path, declared);
  };
  auto train = load_split("train.txt");
  if (!fs::exists(dir / "train.txt")) throw IoError("missing " + (dir / "train.txt").string());
  auto valid = load_split("valid.txt");
  auto test = load_split("test.txt");

  if (declared) {
    ds.vocab = *declared;
  } else {
    for (const auto* part : {&train, &valid, &test}) {
      ds.vocab.entity_count = std::max(ds.vocab.entity_count, part->vocab.entity_count);
      ds.vocab.relation_count = std::max(ds.vocab.relation_count, part->vocab.relation_count);
    }
  }

  std::map<std::int64_t, TimeId> dense;
  for (const auto* part : {&train, &valid, &test}) {
    for (const auto& q : part->quads) dense.emplace(q.time, 0);
  }
  TimeId next = 0;
  for (auto& [raw, id] : dense) {
    id = next++;
    ds.raw_times.push_back(raw);
  }
  auto remap = [&](std::vector<Quadruple>& quads) {
    for (auto& q : quads) q.time = dense.at(q.time);
  };
  remap(train.quads);
  remap(valid.quads);
  remap(test.quads);
  ds.train = std::move(train.quads);
  ds.valid = std::move(valid.quads);
  ds.test = std::move(test.quads);

  if (fs::exists(dir / "entity2id.txt")) ds.vocab.entity_names = read_names(dir / "entity2id.txt", ds.vocab.entity_count);
  if (fs::exists(dir / "relation2id.txt")) {
    ds.vocab.relation_names = read_names(dir / "relation2id.txt", ds.vocab.relation_count);
  }
  if (ds.raw_times.size() >= 2) {
    ds.granularity_note = "raw timestamp step " + std::to_string(ds.raw_times[1] - ds.raw_times[0]);
  }
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_quadruples(dir / "train.txt", dataset.train);
  write_quadruples(dir / "valid.txt", dataset.valid);
  write_quadruples(dir / "test.txt", dataset.test);
  std::ofstream stat(dir / "stat.txt");
  if (!stat) throw IoError("cannot write " + (dir / "stat.txt").string());
  stat << dataset.vocab.entity_count << '\t' << dataset.vocab.relation_count << "\t0\n";
}

std::vector<std::string> validate_dataset(const Dataset& dataset) {
  std::vector<std::string> warnings;
  auto max_time = [](const std::vector<Quadruple>& q) { return q.empty() ? TimeId{-1} : q.back().time; };
  auto min_time = [](const std::vector<Quadruple>& q) { return q.empty() ? TimeId{-1} : q.front().time; };
  if (!dataset.train.empty() && !dataset.test.empty() && max_time(dataset.train) > min_time(dataset.test)) {
    warnings.push_back("train facts extend past the first test timestamp; not an extrapolation split");
  }
  if (!dataset.valid.empty() && !dataset.test.empty() && max_time(dataset.valid) > min_time(dataset.test)) {
    warnings.push_back("valid facts extend past the first test timestamp");
  }
  return warnings;
}

}  // namespace cenet
