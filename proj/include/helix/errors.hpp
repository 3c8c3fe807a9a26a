#pragma once

#include <stdexcept>
#include <string>

namespace helix {

// Invalid configuration (bad rates, bad lengths, unknown presets). CLI exit 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required stage artifact is missing or unreadable. CLI exit 3.
class ArtifactError : public std::runtime_error {
 public:
  explicit ArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data conditions that make the pipeline unable to continue
// (e.g. no clean reads to self-supervise on).
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace helix
