#pragma once

#include <stdexcept>
#include <string>

namespace actdet {

// A caller broke an operation's precondition (shape mismatch, bad index, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration rejected at load time. `field()` holds the dotted path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A stage input artifact is not on disk.
class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(std::string artifact)
      : std::runtime_error("missing input: " + artifact), artifact_(std::move(artifact)) {}
  const std::string& artifact() const noexcept { return artifact_; }

 private:
  std::string artifact_;
};

// Internal consistency check failed; indicates a bug, not bad input.
class InvariantBreach : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace actdet
