#pragma once

#include <stdexcept>
#include <string>

namespace cenet {

enum class ErrorCode {
  parse = 1,
  bounds,
  contract,
  numeric,
  config,
  io,
  generation,
};

// Base of every exception thrown by the core. The C layer maps code() onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorCode::parse, what) {}
};
struct BoundsError : Error {
  explicit BoundsError(const std::string& what) : Error(ErrorCode::bounds, what) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& what) : Error(ErrorCode::contract, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};
struct GenerationError : Error {
  explicit GenerationError(const std::string& what) : Error(ErrorCode::generation, what) {}
};

}  // namespace cenet
