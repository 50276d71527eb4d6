#pragma once

#include <stdexcept>
#include <string>

namespace moose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or model output that could not be parsed.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Input parsed but violates a data-model invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Failure talking to a generation backend.
class GatewayError : public Error {
  public:
    enum class Kind { Transient, Auth, EmptyCompletion, ScriptExhausted, NoMatch, RetriesExhausted, Other };

    GatewayError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool retryable() const noexcept { return kind_ == Kind::Transient; }

  private:
    Kind kind_;
};

} // namespace moose
