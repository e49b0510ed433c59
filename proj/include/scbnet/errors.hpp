#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace scbnet {

// All scbnet failures derive from Error and carry a short machine code.
// The CLI prints them as a single line: error[<code>]: <message>
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct LookupError : Error {
  explicit LookupError(const std::string& m) : Error("lookup", m) {}
};

struct ResolutionError : Error {
  explicit ResolutionError(const std::string& m) : Error("resolution", m) {}
};

struct IngestError : Error {
  explicit IngestError(const std::string& m) : Error("ingest", m) {}
};

struct DecodeError : Error {
  explicit DecodeError(const std::string& m) : Error("decode", m) {}
};

struct CheckpointError : Error {
  explicit CheckpointError(const std::string& m) : Error("checkpoint", m) {}
};

struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error("diverged", m) {}
};

}  // namespace scbnet
