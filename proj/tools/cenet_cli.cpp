// Command-line front end. Talks to the library only through the C API.

#include <cenet/cenet.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int usage_exit = 64;

struct Failure {
  cenet_status status;
  std::string message;
};

void check(cenet_status status) {
  if (status != CENET_OK) throw Failure{status, cenet_last_error()};
}

struct CString {
  char* p = nullptr;
  ~CString() { cenet_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<cenet_config, cenet_config_destroy>;
using DatasetHandle = Handle<cenet_dataset, cenet_dataset_destroy>;
using ModelHandle = Handle<cenet_model, cenet_model_destroy>;

std::string hash_file(const fs::path& path) {
  CString h;
  check(cenet_hash_file(path.string().c_str(), h.out()));
  return h.str();
}

json hash_dataset(const fs::path& dir) {
  json inputs = json::object();
  for (const char* name : {"train.txt", "valid.txt", "test.txt", "stat.txt", "entity2id.txt", "relation2id.txt"}) {
    const auto p = dir / name;
    if (fs::exists(p)) inputs[p.string()] = hash_file(p);
  }
  return inputs;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{CENET_ERR_IO, "cannot write " + path.string()};
  out << text;
  if (!out) throw Failure{CENET_ERR_IO, "write failed: " + path.string()};
}

json make_manifest(const std::string& command, const std::vector<std::string>& argv) {
  return json{{"command", command}, {"version", cenet_version()}, {"argv", argv}};
}

std::string loss_tsv(const json& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch\ttotal\tce\tsup\n";
  for (const auto& r : rows) {
    os << r["epoch"].get<long long>() << '\t' << r["total"].get<double>() << '\t' << r["ce"].get<double>() << '\t'
       << r["sup"].get<double>() << '\n';
  }
  return os.str();
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// Options that map one-to-one onto configuration keys.
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;
  bool early_stop = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "flat key=value configuration file");
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"data", "dataset directory"},
        {"dim", "embedding dimension"},
        {"batch", "minibatch size"},
        {"lr", "Adam learning rate"},
        {"alpha", "weight of the cross-entropy loss in [0, 1]"},
        {"lambda", "copy-term magnitude"},
        {"tau", "contrastive temperature"},
        {"epochs1", "stage-1 epochs"},
        {"epochs2", "stage-2 epochs"},
        {"mask", "evaluation mask recorded in the manifest: none|hard|soft|random|gt"},
        {"seed", "random seed"},
        {"ablation", "none|his-only|nhis-only|no-cl|no-stage2|random-mask|gt-mask"},
        {"precision", "numeric precision (double)"},
        {"early-stop-patience", "epochs without validation improvement before stopping"}};
    for (const auto& [key, help] : keys) {
      app->add_option_function<std::string>("--" + key, [this, key](const std::string& v) { values[key] = v; }, help);
    }
    app->add_flag("--early-stop", early_stop, "stop stage 1 on stalled validation MRR");
  }

  void apply(cenet_config* config) const {
    if (config_file) check(cenet_config_load_file(config, config_file->c_str()));
    for (const auto& [k, v] : values) check(cenet_config_set(config, k.c_str(), v.c_str()));
    if (early_stop) check(cenet_config_set(config, "early-stop", "true"));
  }
};

std::string config_value(const cenet_config* config, const char* key) {
  CString v;
  check(cenet_config_get(config, key, v.out()));
  return v.str();
}

void load_dataset(const std::string& dir, DatasetHandle& ds) {
  check(cenet_dataset_load(dir.c_str(), ds.out()));
}

int run_train(const ConfigFlags& flags, const std::string& out_dir, const std::vector<std::string>& argv) {
  Config config;
  check(cenet_config_create(config.out()));
  flags.apply(config.get());
  const auto data = config_value(config.get(), "data");
  if (data.empty()) throw Failure{CENET_ERR_CONFIG, "no dataset given; pass --data or set data= in the config file"};

  DatasetHandle ds;
  load_dataset(data, ds);
  ModelHandle model;
  CString log;
  check(cenet_model_train(config.get(), ds.get(), model.out(), log.out()));

  const fs::path out(out_dir);
  fs::create_directories(out);
  const auto checkpoint = out / "model.bin";
  check(cenet_model_save(model.get(), checkpoint.string().c_str()));
  const auto losses = json::parse(log.str());
  write_text(out / "loss_stage1.tsv", loss_tsv(losses["stage1"]));
  write_text(out / "loss_stage2.tsv", loss_tsv(losses["stage2"]));

  CString cfg_json;
  check(cenet_config_to_json(config.get(), cfg_json.out()));
  auto manifest = make_manifest("train", argv);
  manifest["config"] = json::parse(cfg_json.str());
  json inputs = hash_dataset(data);
  if (flags.config_file) inputs[*flags.config_file] = hash_file(*flags.config_file);
  manifest["inputs"] = inputs;
  json outputs = json::object();
  for (const char* name : {"model.bin", "model.json", "loss_stage1.tsv", "loss_stage2.tsv"}) {
    outputs[(out / name).string()] = hash_file(out / name);
  }
  manifest["outputs"] = outputs;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  const auto& s1 = losses["stage1"];
  std::cout << "stage1_epochs\t" << s1.size() << "\n";
  if (!s1.empty()) std::cout << "stage1_final_loss\t" << s1.back()["total"].get<double>() << "\n";
  std::cout << "stage2_epochs\t" << losses["stage2"].size() << "\n";
  std::cout << "checkpoint\t" << checkpoint.string() << "\n";
  return 0;
}

std::vector<std::string> parse_splits(const std::string& text) {
  if (text == "all") return {"train", "valid", "test"};
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fs::path manifest_path(const std::optional<std::string>& explicit_path, const std::optional<std::string>& out,
                       const std::string& command) {
  if (explicit_path) return *explicit_path;
  if (out) {
    fs::path p(*out);
    p.replace_extension(".manifest.json");
    return p;
  }
  return "cenet-" + command + ".manifest.json";
}

int run_evaluate(const std::string& checkpoint, const std::string& data, const std::string& splits,
                 const std::optional<std::string>& mask, std::uint64_t seed, const std::optional<std::string>& out,
                 const std::optional<std::string>& manifest_file, const std::vector<std::string>& argv) {
  ModelHandle model;
  check(cenet_model_load(checkpoint.c_str(), model.out()));
  DatasetHandle ds;
  load_dataset(data, ds);

  json result = json::object();
  json per_split = json::object();
  std::cout << "split\tdirection\tmask\tcount\tmrr\thits1\thits3\thits10\n";
  for (const auto& split : parse_splits(splits)) {
    CString js;
    check(cenet_model_evaluate(model.get(), ds.get(), split.c_str(), mask ? mask->c_str() : nullptr, seed, js.out()));
    auto j = json::parse(js.str());
    for (const char* part : {"all", "object", "subject", "new_events", "repeat_events"}) {
      const auto& m = j[part];
      std::cout << split << '\t' << part << '\t' << j["mask"].get<std::string>() << '\t' << m["count"].get<long long>()
                << '\t' << fixed(m["mrr"].get<double>()) << '\t' << fixed(m["hits1"].get<double>()) << '\t'
                << fixed(m["hits3"].get<double>()) << '\t' << fixed(m["hits10"].get<double>()) << '\n';
    }
    per_split[split] = j;
  }
  result["splits"] = per_split;
  if (out) write_text(*out, result.dump(2) + "\n");

  auto manifest = make_manifest("evaluate", argv);
  json inputs = hash_dataset(data);
  inputs[checkpoint] = hash_file(checkpoint);
  manifest["inputs"] = inputs;
  manifest["mask"] = mask ? json(*mask) : json(nullptr);
  manifest["seed"] = seed;
  if (out) manifest["outputs"] = json{{*out, hash_file(*out)}};
  write_text(manifest_path(manifest_file, out, "evaluate"), manifest.dump(2) + "\n");
  return 0;
}

int run_predict(const std::string& checkpoint, const std::string& data, long long entity, long long relation,
                long long time, const std::string& direction, long long k, const std::optional<std::string>& mask,
                std::uint64_t seed, bool as_json, const std::optional<std::string>& manifest_file,
                const std::vector<std::string>& argv) {
  if (direction != "object" && direction != "subject") {
    throw Failure{CENET_ERR_CONFIG, "direction must be object or subject, got '" + direction + "'"};
  }
  ModelHandle model;
  check(cenet_model_load(checkpoint.c_str(), model.out()));
  DatasetHandle ds;
  load_dataset(data, ds);
  CString js;
  check(cenet_model_predict(model.get(), ds.get(), entity, relation, time, direction == "subject", k,
                            mask ? mask->c_str() : nullptr, seed, js.out()));
  const auto j = json::parse(js.str());
  if (as_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "i_hat\t" << (j["i_hat"].get<bool>() ? 1 : 0);
    if (!j["classifier_probability"].is_null()) std::cout << "\tprobability\t" << j["classifier_probability"].get<double>();
    std::cout << "\tmask\t" << j["mask"].get<std::string>() << "\n";
    std::cout << "rank\tentity\tname\tscore\thistorical\n";
    for (const auto& row : j["top"]) {
      std::cout << row["rank"].get<long long>() << '\t' << row["entity"].get<long long>() << '\t'
                << (row.contains("name") ? row["name"].get<std::string>() : std::string("-")) << '\t'
                << row["score"].get<double>() << '\t' << (row["historical"].get<bool>() ? 1 : 0) << '\n';
    }
  }
  auto manifest = make_manifest("predict", argv);
  json inputs = hash_dataset(data);
  inputs[checkpoint] = hash_file(checkpoint);
  manifest["inputs"] = inputs;
  write_text(manifest_path(manifest_file, std::nullopt, "predict"), manifest.dump(2) + "\n");
  return 0;
}

int run_stats(const std::string& data, bool as_json, const std::optional<std::string>& manifest_file,
              const std::vector<std::string>& argv) {
  DatasetHandle ds;
  load_dataset(data, ds);
  CString js;
  check(cenet_dataset_stats(ds.get(), js.out()));
  const auto j = json::parse(js.str());
  if (as_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "entities\t" << j["entities"].get<long long>() << "\n";
    std::cout << "relations\t" << j["relations"].get<long long>() << "\n";
    std::cout << "timestamps\t" << j["timestamps"].get<long long>() << "\n";
    std::cout << "split\tquads\tnew_event_rate\n";
    for (const auto& [name, s] : j["splits"].items()) {
      std::cout << name << '\t' << s["quads"].get<long long>() << '\t' << fixed(s["new_event_rate"].get<double>())
                << '\n';
    }
    for (const auto& w : j["warnings"]) std::cerr << "warning\t" << w.get<std::string>() << "\n";
  }
  auto manifest = make_manifest("stats", argv);
  manifest["inputs"] = hash_dataset(data);
  write_text(manifest_path(manifest_file, std::nullopt, "stats"), manifest.dump(2) + "\n");
  return 0;
}

int run_synth(const cenet_synth_spec& spec, const std::string& out_dir, const std::vector<std::string>& argv) {
  CString summary;
  check(cenet_synth_write(&spec, out_dir.c_str(), summary.out()));
  const fs::path out(out_dir);
  const auto j = json::parse(summary.str());
  write_text(out / "synth.json", j.dump(2) + "\n");
  auto manifest = make_manifest("synth", argv);
  manifest["spec"] = j;
  json outputs = json::object();
  for (const char* name : {"train.txt", "valid.txt", "test.txt", "stat.txt", "labels.tsv", "synth.json"}) {
    if (fs::exists(out / name)) outputs[(out / name).string()] = hash_file(out / name);
  }
  manifest["outputs"] = outputs;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "facts\t" << j["facts"].get<long long>() << "\n";
  std::cout << "new_event_rate\t" << fixed(j["new_event_rate"].get<double>()) << "\n";
  return 0;
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Temporal knowledge graph event forecasting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cenet_version());

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string train_out = "run";
  train->add_option("--out", train_out, "output directory")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "filtered MRR and Hits@k of a checkpoint");
  std::string eval_checkpoint, eval_data, eval_split = "test";
  std::optional<std::string> eval_mask, eval_out, eval_manifest;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  evaluate->add_option("--data", eval_data, "dataset directory")->required();
  evaluate->add_option("--split", eval_split, "train, valid, test, a comma list, or all")->capture_default_str();
  evaluate->add_option("--mask", eval_mask, "none|hard|soft|random|gt (default soft, none without a classifier)");
  evaluate->add_option("--seed", eval_seed, "seed of the random mask");
  evaluate->add_option("--out", eval_out, "metrics JSON file");
  evaluate->add_option("--manifest", eval_manifest, "run manifest path");

  auto* predict = app.add_subcommand("predict", "top-k answers for one query");
  std::string pred_checkpoint, pred_data, pred_direction = "object";
  long long pred_s = 0, pred_p = 0, pred_t = 0, pred_k = 10;
  std::optional<std::string> pred_mask, pred_manifest;
  std::uint64_t pred_seed = 0;
  bool pred_json = false;
  predict->add_option("--checkpoint", pred_checkpoint, "model checkpoint")->required();
  predict->add_option("--data", pred_data, "dataset directory")->required();
  predict->add_option("entity", pred_s, "known entity id")->required();
  predict->add_option("relation", pred_p, "relation id")->required();
  predict->add_option("time", pred_t, "time id")->required();
  predict->add_option("--direction", pred_direction, "object or subject")->capture_default_str();
  predict->add_option("--k", pred_k, "number of answers")->capture_default_str();
  predict->add_option("--mask", pred_mask, "none|hard|soft|random");
  predict->add_option("--seed", pred_seed, "seed of the random mask");
  predict->add_flag("--json", pred_json, "print JSON");
  predict->add_option("--manifest", pred_manifest, "run manifest path");

  auto* stats = app.add_subcommand("stats", "dataset counts and new-event rates");
  std::string stats_data;
  std::optional<std::string> stats_manifest;
  bool stats_json = false;
  stats->add_option("--data", stats_data, "dataset directory")->required();
  stats->add_flag("--json", stats_json, "print JSON");
  stats->add_option("--manifest", stats_manifest, "run manifest path");

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  cenet_synth_spec spec;
  cenet_synth_spec_default(&spec);
  std::string synth_out;
  bool signal = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--entities", spec.entity_count)->capture_default_str();
  synth->add_option("--relations", spec.relation_count)->capture_default_str();
  synth->add_option("--timestamps", spec.timestamp_count)->capture_default_str();
  synth->add_option("--per-snapshot", spec.quads_per_snapshot)->capture_default_str();
  synth->add_option("--repeat-prob", spec.repeat_probability)->capture_default_str();
  synth->add_flag("--new-event-signal", signal, "rule-driven new events on relation 0");
  synth->add_option("--walk-length", spec.walk_length, "walk steps per subject, 0 for the entity count")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_option("--train-fraction", spec.train_fraction)->capture_default_str();
  synth->add_option("--valid-fraction", spec.valid_fraction)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (train->parsed()) {
      CString keys;
      if (cenet_config_keys(keys.out()) == CENET_OK) msg += "; valid config keys: " + keys.str();
    }
    std::cerr << "error\tusage\t" << one_line(msg) << "\n";
    return usage_exit;
  }

  try {
    if (train->parsed()) return run_train(train_flags, train_out, args);
    if (evaluate->parsed()) {
      return run_evaluate(eval_checkpoint, eval_data, eval_split, eval_mask, eval_seed, eval_out, eval_manifest, args);
    }
    if (predict->parsed()) {
      return run_predict(pred_checkpoint, pred_data, pred_s, pred_p, pred_t, pred_direction, pred_k, pred_mask,
                         pred_seed, pred_json, pred_manifest, args);
    }
    if (stats->parsed()) return run_stats(stats_data, stats_json, stats_manifest, args);
    if (synth->parsed()) {
      spec.new_event_signal = signal ? 1 : 0;
      return run_synth(spec, synth_out, args);
    }
  } catch (const Failure& f) {
    std::cerr << "error\t" << cenet_status_name(f.status) << '\t' << one_line(f.message) << "\n";
    return static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error\tunknown\t" << one_line(e.what()) << "\n";
    return static_cast<int>(CENET_ERR_UNKNOWN);
  }
  return usage_exit;
}
