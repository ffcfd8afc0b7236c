#pragma once

// Run configuration. Precedence is: explicit set() calls (CLI flags) over a
// key=value config file over built-in defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cenet/inference.hpp"
#include "cenet/model.hpp"
#include "cenet/trainer.hpp"

namespace cenet {

struct RunConfig {
  std::string data;
  std::int64_t dim = 200;
  std::int64_t batch = 1024;
  double lr = 0.001;
  double alpha = 0.2;
  double lambda = 2.0;
  double tau = 0.1;
  std::int64_t epochs1 = 30;
  std::int64_t epochs2 = 20;
  std::string mask = "soft";
  std::uint64_t seed = 0;
  // none | his-only | nhis-only | no-cl | no-stage2 | random-mask | gt-mask
  std::string ablation = "none";
  std::string precision = "double";
  bool early_stop = false;
  std::int64_t early_stop_patience = 3;

  static const std::vector<std::string>& keys();

  /// ConfigError on an unknown key (the message lists the valid ones) or a
  /// value that does not parse / is out of range.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> entries() const;

  /// Flat `key = value` lines; `#` starts a comment.
  void load_file(const std::filesystem::path& path);

  Hyper hyper() const;
  TrainOptions train_options() const;
  /// The mask used for evaluation after ablation switches are applied.
  MaskMode effective_mask() const;
  bool runs_stage2() const;
};

}  // namespace cenet
