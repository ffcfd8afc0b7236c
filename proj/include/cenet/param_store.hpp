#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "cenet/tensor.hpp"

namespace cenet {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // Adam first and second moments.
  Matrix m;
  Matrix v;
  std::int64_t step = 0;
  bool frozen = false;
};

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class ParamStore {
 public:
  /// Registers a parameter with zeroed gradient and moments; returns its slot.
  std::size_t add(std::string name, Matrix value);

  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  std::size_t size() const { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  void set_frozen(const std::string& name, bool frozen);
  void freeze_all(bool frozen);

  /// Checksum over parameter values only (FNV-1a of the raw bytes).
  std::uint64_t value_checksum(const std::vector<std::string>& names) const;

 private:
  std::vector<Parameter> params_;
};

/// One bias-corrected Adam update of every unfrozen parameter, then clears all
/// gradients.
void adam_step(ParamStore& store, const AdamOptions& options);

/// Fills `m` uniformly from [-bound, bound].
void init_uniform(Matrix& m, double bound, std::mt19937_64& rng);

// Versioned binary form of every parameter with optimizer state. The layout
// is host-endian doubles; save/load round-trips bit-exactly.
void write_params(std::ostream& out, const ParamStore& store);
ParamStore read_params(std::istream& in);

}  // namespace cenet
