#include "cenet/cenet.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "cenet/config.hpp"
#include "cenet/content_hash.hpp"
#include "cenet/data.hpp"
#include "cenet/error.hpp"
#include "cenet/history_index.hpp"
#include "cenet/inference.hpp"
#include "cenet/model.hpp"
#include "cenet/synth.hpp"
#include "cenet/trainer.hpp"

struct cenet_config {
  cenet::RunConfig value;
};

struct cenet_dataset {
  cenet::Dataset value;
};

struct cenet_model {
  cenet::Model value;
};

namespace {

using json = nlohmann::ordered_json;

thread_local std::string last_error;

cenet_status status_of(cenet::ErrorCode code) {
  switch (code) {
    case cenet::ErrorCode::parse: return CENET_ERR_PARSE;
    case cenet::ErrorCode::bounds: return CENET_ERR_BOUNDS;
    case cenet::ErrorCode::contract: return CENET_ERR_CONTRACT;
    case cenet::ErrorCode::numeric: return CENET_ERR_NUMERIC;
    case cenet::ErrorCode::config: return CENET_ERR_CONFIG;
    case cenet::ErrorCode::io: return CENET_ERR_IO;
    case cenet::ErrorCode::generation: return CENET_ERR_GENERATION;
  }
  return CENET_ERR_UNKNOWN;
}

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
cenet_status api(F&& body) {
  try {
    body();
    last_error.clear();
    return CENET_OK;
  } catch (const cenet::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return CENET_ERR_PARSE;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return CENET_ERR_IO;
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return CENET_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CENET_ERR_UNKNOWN;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CENET_ERR_UNKNOWN;
  } catch (...) {
    last_error = "unknown failure";
    return CENET_ERR_UNKNOWN;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::size_t thread_count() {
  const char* env = std::getenv("CENET_NUM_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    throw cenet::ConfigError(std::string("CENET_NUM_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<std::size_t>(n);
}

json metrics_json(const cenet::Metrics& m) {
  return json{{"mrr", m.mrr}, {"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10}, {"count", m.count}};
}

json losses_json(const std::vector<cenet::EpochLoss>& losses) {
  json out = json::array();
  for (const auto& l : losses) {
    out.push_back(json{{"epoch", l.epoch}, {"total", l.total}, {"ce", l.ce}, {"sup", l.sup}});
  }
  return out;
}

cenet::MaskMode mask_for(const cenet::Model& model, const char* mask) {
  if (mask == nullptr || *mask == '\0') {
    return model.stage2_done ? cenet::MaskMode::soft : cenet::MaskMode::none;
  }
  return cenet::parse_mask_mode(mask);
}

cenet::Model fresh_model(const cenet::RunConfig& config, const cenet::Dataset& ds) {
  if (ds.vocab.entity_count < 1 || ds.vocab.relation_count < 1) {
    throw cenet::ContractError("dataset has no entities or relations");
  }
  const cenet::ModelShape shape{ds.vocab.entity_count, ds.vocab.relation_count, config.dim};
  return cenet::make_model(shape, config.hyper(), config.seed);
}

}  // namespace

extern "C" {

const char* cenet_version(void) { return "0.1.0"; }

const char* cenet_last_error(void) { return last_error.c_str(); }

const char* cenet_status_name(cenet_status status) {
  switch (status) {
    case CENET_OK: return "ok";
    case CENET_ERR_PARSE: return "parse";
    case CENET_ERR_BOUNDS: return "bounds";
    case CENET_ERR_CONTRACT: return "contract";
    case CENET_ERR_NUMERIC: return "numeric";
    case CENET_ERR_CONFIG: return "config";
    case CENET_ERR_IO: return "io";
    case CENET_ERR_GENERATION: return "generation";
    case CENET_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case CENET_ERR_UNKNOWN: return "unknown";
  }
  return "unknown";
}

void cenet_string_free(char* text) { std::free(text); }

cenet_status cenet_config_create(cenet_config** out) {
  return api([&] {
    require(out, "out");
    *out = new cenet_config{};
  });
}

void cenet_config_destroy(cenet_config* config) { delete config; }

cenet_status cenet_config_set(cenet_config* config, const char* key, const char* value) {
  return api([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
  });
}

cenet_status cenet_config_get(const cenet_config* config, const char* key, char** out) {
  return api([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    *out = dup_string(config->value.get(key));
  });
}

cenet_status cenet_config_load_file(cenet_config* config, const char* path) {
  return api([&] {
    require(config, "config");
    require(path, "path");
    config->value.load_file(path);
  });
}

cenet_status cenet_config_keys(char** out) {
  return api([&] {
    require(out, "out");
    std::string keys;
    for (const auto& k : cenet::RunConfig::keys()) {
      if (!keys.empty()) keys += ",";
      keys += k;
    }
    *out = dup_string(keys);
  });
}

cenet_status cenet_config_to_json(const cenet_config* config, char** out) {
  return api([&] {
    require(config, "config");
    require(out, "out");
    json j = json::object();
    for (const auto& [k, v] : config->value.entries()) j[k] = v;
    *out = dup_string(j.dump(2));
  });
}

cenet_status cenet_dataset_load(const char* directory, cenet_dataset** out) {
  return api([&] {
    require(directory, "directory");
    require(out, "out");
    *out = new cenet_dataset{cenet::load_dataset(directory)};
  });
}

void cenet_dataset_destroy(cenet_dataset* dataset) { delete dataset; }

cenet_status cenet_dataset_stats(const cenet_dataset* dataset, char** json_out) {
  return api([&] {
    require(dataset, "dataset");
    require(json_out, "json_out");
    const auto& ds = dataset->value;
    json j;
    j["entities"] = ds.vocab.entity_count;
    j["relations"] = ds.vocab.relation_count;
    j["timestamps"] = ds.raw_times.size();
    json splits = json::object();
    for (const auto split : {cenet::Split::train, cenet::Split::valid, cenet::Split::test}) {
      const auto& facts = split == cenet::Split::train   ? ds.train
                          : split == cenet::Split::valid ? ds.valid
                                                         : ds.test;
      splits[cenet::to_string(split)] = json{{"quads", facts.size()},
                                             {"new_event_rate", cenet::new_event_rate(ds, split)}};
    }
    j["splits"] = splits;
    j["warnings"] = cenet::validate_dataset(ds);
    *json_out = dup_string(j.dump(2));
  });
}

cenet_status cenet_model_create(const cenet_config* config, const cenet_dataset* dataset, cenet_model** out) {
  return api([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(out, "out");
    *out = new cenet_model{fresh_model(config->value, dataset->value)};
  });
}

cenet_status cenet_model_train(const cenet_config* config, const cenet_dataset* dataset, cenet_model** out,
                               char** log_json) {
  return api([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(out, "out");
    const auto& cfg = config->value;
    const auto& ds = dataset->value;
    auto model = fresh_model(cfg, ds);
    const auto options = cfg.train_options();
    const auto queries = cenet::split_queries(ds, cenet::Split::train, true);
    if (queries.empty()) throw cenet::ContractError("train split is empty");

    cenet::ValidationScore validation;
    if (options.early_stop_patience > 0) {
      if (ds.valid.empty()) throw cenet::ConfigError("early-stop needs a non-empty valid split");
      const auto threads = thread_count();
      validation = [&ds, threads](const cenet::Model& m) {
        cenet::EvalOptions eo;
        eo.threads = threads;
        return cenet::evaluate(m, ds, cenet::Split::valid, cenet::PredictOptions{cenet::MaskMode::none, 0}, eo).all.mrr;
      };
    }
    const auto stage1 = cenet::train_stage1(model, queries, options, validation);
    std::vector<cenet::EpochLoss> stage2;
    if (cfg.runs_stage2()) stage2 = cenet::train_stage2(model, queries, options);

    if (log_json != nullptr) {
      json j{{"stage1", losses_json(stage1)}, {"stage2", losses_json(stage2)}};
      *log_json = dup_string(j.dump(2));
    }
    *out = new cenet_model{std::move(model)};
  });
}

void cenet_model_destroy(cenet_model* model) { delete model; }

cenet_status cenet_model_save(const cenet_model* model, const char* path) {
  return api([&] {
    require(model, "model");
    require(path, "path");
    cenet::save_model(path, model->value);
  });
}

cenet_status cenet_model_load(const char* path, cenet_model** out) {
  return api([&] {
    require(path, "path");
    require(out, "out");
    *out = new cenet_model{cenet::load_model(path)};
  });
}

cenet_status cenet_model_info(const cenet_model* model, char** json_out) {
  return api([&] {
    require(model, "model");
    require(json_out, "json_out");
    const auto& m = model->value;
    json j{{"entities", m.params.shape.entity_count},
           {"relations", m.params.shape.relation_count},
           {"dim", m.params.shape.dim},
           {"alpha", m.hyper.alpha},
           {"lambda", m.hyper.lambda},
           {"tau", m.hyper.tau},
           {"branches", cenet::to_string(m.hyper.branches)},
           {"seed", m.seed},
           {"stage1_done", m.stage1_done},
           {"stage2_done", m.stage2_done}};
    *json_out = dup_string(j.dump(2));
  });
}

cenet_status cenet_model_checksum(const cenet_model* model, uint64_t* out) {
  return api([&] {
    require(model, "model");
    require(out, "out");
    std::vector<std::string> names;
    for (const auto& p : model->value.params.store) names.push_back(p.name);
    *out = model->value.params.store.value_checksum(names);
  });
}

cenet_status cenet_model_evaluate(const cenet_model* model, const cenet_dataset* dataset, const char* split,
                                  const char* mask, uint64_t random_seed, char** json_out) {
  return api([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(split, "split");
    require(json_out, "json_out");
    const auto which = cenet::parse_split(split);
    cenet::PredictOptions po;
    po.mode = mask_for(model->value, mask);
    po.random_seed = random_seed;
    cenet::EvalOptions eo;
    eo.threads = thread_count();
    const auto report = cenet::evaluate(model->value, dataset->value, which, po, eo);
    json j{{"split", cenet::to_string(report.split)},
           {"mask", cenet::to_string(report.mode)},
           {"all", metrics_json(report.all)},
           {"object", metrics_json(report.object)},
           {"subject", metrics_json(report.subject)},
           {"new_events", metrics_json(report.new_events)},
           {"repeat_events", metrics_json(report.repeat_events)},
           {"classifier", json{{"positive_rate", report.classifier_positive_rate},
                               {"accuracy", report.classifier_accuracy}}}};
    *json_out = dup_string(j.dump(2));
  });
}

cenet_status cenet_model_predict(const cenet_model* model, const cenet_dataset* dataset, int64_t entity,
                                 int64_t relation, int64_t time, int subject_direction, int64_t k, const char* mask,
                                 uint64_t random_seed, char** json_out) {
  return api([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(json_out, "json_out");
    const auto& m = model->value;
    const auto& ds = dataset->value;
    const auto n = m.params.shape.entity_count;
    const auto r = m.params.shape.relation_count;
    if (ds.vocab.entity_count != n || ds.vocab.relation_count != r) {
      throw cenet::ConfigError("vocab mismatch: model expects " + std::to_string(n) + " entities / " +
                               std::to_string(r) + " relations, dataset has " +
                               std::to_string(ds.vocab.entity_count) + " / " +
                               std::to_string(ds.vocab.relation_count));
    }
    if (entity < 0 || entity >= n) {
      throw cenet::BoundsError("entity id " + std::to_string(entity) + " outside [0, " + std::to_string(n) + ")");
    }
    if (relation < 0 || relation >= r) {
      throw cenet::BoundsError("relation id " + std::to_string(relation) + " outside [0, " + std::to_string(r) + ")");
    }
    if (time < 0) throw cenet::BoundsError("time must be non-negative");
    if (k < 1) throw cenet::ConfigError("k must be positive");
    const auto mode = mask_for(m, mask);
    if (mode == cenet::MaskMode::ground_truth) {
      throw cenet::ConfigError("mask gt needs the true answer and is only available in evaluate");
    }

    const auto known = cenet::all_augmented_facts(ds);
    std::vector<cenet::Quadruple> past;
    for (const auto& f : known) {
      if (f.time < time) past.push_back(f);
    }
    const auto index = cenet::HistoryIndex::build(past);
    cenet::Query q;
    q.subject = static_cast<cenet::EntityId>(entity);
    q.predicate = static_cast<cenet::RelationId>(subject_direction ? relation + r : relation);
    q.time = time;
    q.freq = index.frequencies_at(q.subject, q.predicate, time);

    cenet::PredictOptions po;
    po.mode = mode;
    po.random_seed = random_seed;
    const auto pred = cenet::predict(m, std::span<const cenet::Query>(&q, 1), po).front();
    const auto order = cenet::rank_entities(pred.scores);
    const auto rows = std::min<std::int64_t>(k, n);

    json top = json::array();
    for (std::int64_t i = 0; i < rows; ++i) {
      const auto e = order[static_cast<std::size_t>(i)];
      json row{{"rank", i + 1}, {"entity", e}};
      if (!ds.vocab.entity_names.empty()) row["name"] = ds.vocab.entity_names[static_cast<std::size_t>(e)];
      row["score"] = pred.scores[static_cast<std::size_t>(e)];
      row["historical"] = cenet::contains(q.freq, e);
      top.push_back(row);
    }
    json j{{"entity", entity},
           {"relation", relation},
           {"query_relation", q.predicate},
           {"time", time},
           {"direction", subject_direction ? "subject" : "object"},
           {"mask", cenet::to_string(mode)},
           {"i_hat", pred.i_hat},
           {"classifier_probability", m.stage2_done ? json(pred.classifier_probability) : json(nullptr)},
           {"mask_fallback", pred.mask_fallback},
           {"history_size", q.freq.size()},
           {"top", top}};
    if (!ds.vocab.relation_names.empty()) j["relation_name"] = ds.vocab.relation_names[static_cast<std::size_t>(relation)];
    *json_out = dup_string(j.dump(2));
  });
}

void cenet_synth_spec_default(cenet_synth_spec* spec) {
  if (spec == nullptr) return;
  const cenet::SynthSpec d;
  spec->entity_count = d.entity_count;
  spec->relation_count = d.relation_count;
  spec->timestamp_count = d.timestamp_count;
  spec->quads_per_snapshot = d.quads_per_snapshot;
  spec->repeat_probability = d.repeat_probability;
  spec->new_event_signal = d.new_event_signal ? 1 : 0;
  spec->walk_length = d.walk_length;
  spec->seed = d.seed;
  spec->train_fraction = d.train_fraction;
  spec->valid_fraction = d.valid_fraction;
}

cenet_status cenet_synth_write(const cenet_synth_spec* spec, const char* directory, char** summary_json) {
  return api([&] {
    require(spec, "spec");
    require(directory, "directory");
    cenet::SynthSpec s;
    s.entity_count = spec->entity_count;
    s.relation_count = spec->relation_count;
    s.timestamp_count = spec->timestamp_count;
    s.quads_per_snapshot = spec->quads_per_snapshot;
    s.repeat_probability = spec->repeat_probability;
    s.new_event_signal = spec->new_event_signal != 0;
    s.walk_length = spec->walk_length;
    s.seed = spec->seed;
    s.train_fraction = spec->train_fraction;
    s.valid_fraction = spec->valid_fraction;
    const auto result = cenet::generate(s);

    const std::filesystem::path dir(directory);
    std::filesystem::create_directories(dir);
    cenet::write_dataset(dir, result.dataset);
    std::ofstream labels(dir / "labels.tsv");
    if (!labels) throw cenet::IoError("cannot write " + (dir / "labels.tsv").string());
    labels << "subject\tpredicate\tobject\ttime\tnew\n";
    for (std::size_t i = 0; i < result.stream.size(); ++i) {
      const auto& f = result.stream[i];
      labels << f.subject << '\t' << f.predicate << '\t' << f.object << '\t' << f.time << '\t'
             << static_cast<int>(result.is_new[i]) << '\n';
    }
    if (!labels) throw cenet::IoError("write failed: " + (dir / "labels.tsv").string());

    json j{{"entity_count", s.entity_count},
           {"relation_count", s.relation_count},
           {"timestamp_count", s.timestamp_count},
           {"quads_per_snapshot", s.quads_per_snapshot},
           {"repeat_probability", s.repeat_probability},
           {"new_event_signal", s.new_event_signal},
           {"walk_length", s.walk_length},
           {"seed", s.seed},
           {"train_fraction", s.train_fraction},
           {"valid_fraction", s.valid_fraction},
           {"facts", result.stream.size()},
           {"new_event_rate", result.new_event_rate},
           {"train", result.dataset.train.size()},
           {"valid", result.dataset.valid.size()},
           {"test", result.dataset.test.size()}};
    if (summary_json != nullptr) *summary_json = dup_string(j.dump(2));
  });
}

cenet_status cenet_hash_file(const char* path, char** out) {
  return api([&] {
    require(path, "path");
    require(out, "out");
    *out = dup_string(cenet::git_blob_hash_file(path));
  });
}

}  // extern "C"
