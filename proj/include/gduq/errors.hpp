#pragma once

#include <stdexcept>
#include <string>

namespace gduq {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, artifact 4.
// Everything else (op misuse, shape mismatch) throws std::invalid_argument.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ArtifactError : std::runtime_error {
  explicit ArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gduq
