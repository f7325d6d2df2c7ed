#pragma once

#include <stdexcept>
#include <string>

namespace spos {

// Invalid configuration; carries the offending field name for CLI diagnostics.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, std::string message)
      : std::runtime_error("config field '" + field + "': " + message),
        field_(std::move(field)), message_(std::move(message)) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

private:
  std::string field_;
  std::string message_;
};

// Operation called on an object whose lifecycle state does not allow it.
class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Requested diagnostic or reference is not defined for this target.
class UnsupportedTargetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A particle left the finite domain; carries step and particle index.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(long long step, long long particle)
      : std::runtime_error("divergence at step " + std::to_string(step) +
                           ", particle " + std::to_string(particle)),
        step_(step), particle_(particle) {}
  long long step() const { return step_; }
  long long particle() const { return particle_; }

private:
  long long step_;
  long long particle_;
};

}  // namespace spos
