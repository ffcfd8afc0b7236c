#include "cenet/param_store.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "cenet/error.hpp"

namespace cenet {

namespace {

constexpr char kParamsMagic[8] = {'C', 'N', 'P', 'A', 'R', 'A', 'M', 'S'};
constexpr std::uint32_t kParamsVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated parameter block");
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_matrix(std::istream& in, Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  m.resize(rows, cols);
  if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
    throw IoError("truncated parameter data");
  }
}

}  // namespace

std::size_t ParamStore::add(std::string name, Matrix value) {
  for (const auto& p : params_) {
    if (p.name == name) throw ContractError("duplicate parameter " + name);
  }
  Parameter p;
  p.name = std::move(name);
  p.grad = Matrix::Zero(value.rows(), value.cols());
  p.m = Matrix::Zero(value.rows(), value.cols());
  p.v = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

Parameter& ParamStore::at(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ContractError("unknown parameter " + name);
}

const Parameter& ParamStore::at(const std::string& name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParamStore::set_frozen(const std::string& name, bool frozen) { at(name).frozen = frozen; }

void ParamStore::freeze_all(bool frozen) {
  for (auto& p : params_) p.frozen = frozen;
}

std::uint64_t ParamStore::value_checksum(const std::vector<std::string>& names) const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& name : names) {
    const auto& m = at(name).value;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

void adam_step(ParamStore& store, const AdamOptions& o) {
  for (auto& p : store) {
    if (p.frozen) continue;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ContractError("adam_step: gradient shape differs for " + p.name);
    }
    ops::check_finite(p.grad, "gradient of " + p.name);
    ++p.step;
    p.m = o.beta1 * p.m + (1.0 - o.beta1) * p.grad;
    p.v = o.beta2 * p.v + (1.0 - o.beta2) * p.grad.cwiseProduct(p.grad);
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(p.step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(p.step));
    p.value.array() -= o.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + o.eps);
  }
  store.zero_grad();
}

void init_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void write_params(std::ostream& out, const ParamStore& store) {
  out.write(kParamsMagic, sizeof(kParamsMagic));
  put(out, kParamsVersion);
  put(out, static_cast<std::uint64_t>(store.size()));
  for (const auto& p : store) {
    put(out, static_cast<std::uint64_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put(out, static_cast<std::int64_t>(p.value.rows()));
    put(out, static_cast<std::int64_t>(p.value.cols()));
    put(out, p.step);
    put(out, static_cast<std::uint8_t>(p.frozen));
    put_matrix(out, p.value);
    put_matrix(out, p.m);
    put_matrix(out, p.v);
  }
  if (!out) throw IoError("failed writing parameters");
}

ParamStore read_params(std::istream& in) {
  char magic[sizeof(kParamsMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    throw ParseError("not a parameter block");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kParamsVersion) throw ParseError("unsupported parameter block version " + std::to_string(version));
  const auto count = get<std::uint64_t>(in);
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint64_t>(in);
    if (name_len > 4096) throw ParseError("corrupt parameter name");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len))) throw IoError("truncated parameter name");
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0) throw ParseError("corrupt parameter shape");
    const auto step = get<std::int64_t>(in);
    const auto frozen = get<std::uint8_t>(in);
    Matrix value;
    get_matrix(in, value, rows, cols);
    const auto slot = store.add(std::move(name), std::move(value));
    auto& p = store[slot];
    get_matrix(in, p.m, rows, cols);
    get_matrix(in, p.v, rows, cols);
    p.step = step;
    p.frozen = frozen != 0;
  }
  return store;
}

}  // namespace cenet
