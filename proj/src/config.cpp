#include "cenet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cenet/error.hpp"

namespace cenet {

namespace {

std::string normalize(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t to_int(const std::string& key, const std::string& v, std::int64_t min) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  if (out < min) throw ConfigError(key + ": must be at least " + std::to_string(min));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string key_list() {
  std::string out;
  for (const auto& k : RunConfig::keys()) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {"data",  "dim",     "batch",   "lr",   "alpha",   "lambda",
                                             "tau",   "epochs1", "epochs2", "mask", "seed",    "ablation",
                                             "precision", "early-stop", "early-stop-patience"};
  return k;
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const auto key = normalize(raw_key);
  const auto value = trim(raw_value);
  if (key == "data") {
    data = value;
  } else if (key == "dim") {
    dim = to_int(key, value, 1);
  } else if (key == "batch") {
    batch = to_int(key, value, 1);
  } else if (key == "lr") {
    lr = to_double(key, value);
    if (!(lr > 0.0)) throw ConfigError("lr: must be positive");
  } else if (key == "alpha") {
    alpha = to_double(key, value);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha: must lie in [0, 1]");
  } else if (key == "lambda") {
    lambda = to_double(key, value);
    if (!(lambda > 0.0)) throw ConfigError("lambda: must be positive");
  } else if (key == "tau") {
    tau = to_double(key, value);
    if (!(tau > 0.0)) throw ConfigError("tau: must be positive");
  } else if (key == "epochs1") {
    epochs1 = to_int(key, value, 0);
  } else if (key == "epochs2") {
    epochs2 = to_int(key, value, 0);
  } else if (key == "mask") {
    parse_mask_mode(value);
    mask = value;
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(to_int(key, value, 0));
  } else if (key == "ablation") {
    static const std::vector<std::string> allowed = {"none",      "his-only",    "nhis-only", "no-cl",
                                                     "no-stage2", "random-mask", "gt-mask"};
    if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
      throw ConfigError("ablation: unknown variant '" + value +
                        "' (expected none, his-only, nhis-only, no-cl, no-stage2, random-mask, gt-mask)");
    }
    ablation = value;
  } else if (key == "precision") {
    if (value == "single") throw ConfigError("precision: single precision is not available in this build; use double");
    if (value != "double") throw ConfigError("precision: expected double");
    precision = value;
  } else if (key == "early-stop") {
    early_stop = to_bool(key, value);
  } else if (key == "early-stop-patience") {
    early_stop_patience = to_int(key, value, 1);
  } else {
    throw ConfigError("unknown config key '" + raw_key + "'; valid keys: " + key_list());
  }
}

std::string RunConfig::get(const std::string& raw_key) const {
  const auto key = normalize(raw_key);
  if (key == "data") return data;
  if (key == "dim") return std::to_string(dim);
  if (key == "batch") return std::to_string(batch);
  if (key == "lr") return fmt_double(lr);
  if (key == "alpha") return fmt_double(alpha);
  if (key == "lambda") return fmt_double(lambda);
  if (key == "tau") return fmt_double(tau);
  if (key == "epochs1") return std::to_string(epochs1);
  if (key == "epochs2") return std::to_string(epochs2);
  if (key == "mask") return mask;
  if (key == "seed") return std::to_string(seed);
  if (key == "ablation") return ablation;
  if (key == "precision") return precision;
  if (key == "early-stop") return early_stop ? "true" : "false";
  if (key == "early-stop-patience") return std::to_string(early_stop_patience);
  throw ConfigError("unknown config key '" + raw_key + "'; valid keys: " + key_list());
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k, get(k));
  return out;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

Hyper RunConfig::hyper() const {
  Hyper h;
  h.alpha = ablation == "no-cl" ? 1.0 : alpha;
  h.lambda = lambda;
  h.tau = tau;
  if (ablation == "his-only") h.branches = Branches::historical_only;
  if (ablation == "nhis-only") h.branches = Branches::nonhistorical_only;
  return h;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.batch = batch;
  o.adam.lr = lr;
  o.epochs1 = epochs1;
  o.epochs2 = runs_stage2() ? epochs2 : 0;
  o.early_stop_patience = early_stop ? early_stop_patience : 0;
  return o;
}

MaskMode RunConfig::effective_mask() const {
  if (ablation == "no-cl" || ablation == "no-stage2") return MaskMode::none;
  if (ablation == "random-mask") return MaskMode::random;
  if (ablation == "gt-mask") return MaskMode::ground_truth;
  return parse_mask_mode(mask);
}

bool RunConfig::runs_stage2() const { return ablation != "no-cl" && ablation != "no-stage2"; }

}  // namespace cenet
