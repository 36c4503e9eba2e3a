#pragma once

#include <stdexcept>
#include <string>

namespace fieldauth {

// Argument outside the mathematical domain of an operation (negative distance,
// zero divisor, border pixel, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid or incomplete configuration (unset lightweight TE energy, missing
// scenario inputs, malformed params file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, bad_version, length_mismatch, bad_record };

  DecodeError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class FramingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyncError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fieldauth
