#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace dsukit {

// Error taxonomy shared across all modules. Codes map 1:1 onto the HTTP
// error envelope and the CLI exit paths.
enum class Errc {
  parse_error,
  validation,
  privilege,
  auth,
  not_found,
  already_exists,
  conflict,
  corruption,
  immutable,
  cycle,
  backpressure,
  retryable,
  no_changes,
  incomplete_domain,
  config,
  io,
  internal,
};

const char* errc_name(Errc c);

struct Error {
  Errc code = Errc::internal;
  std::string message;
  std::string field;  // offending field or parameter, when known

  std::string describe() const {
    std::string s = errc_name(code);
    if (!field.empty()) s += " [" + field + "]";
    if (!message.empty()) s += ": " + message;
    return s;
  }
};

inline Error make_error(Errc code, std::string message, std::string field = {}) {
  return Error{code, std::move(message), std::move(field)};
}

// Thrown only by Result::value() when a caller unwraps a failed result.
class ErrorException : public std::runtime_error {
 public:
  explicit ErrorException(Error e) : std::runtime_error(e.describe()), error_(std::move(e)) {}
  const Error& error() const noexcept { return error_; }

 private:
  Error error_;
};

// Minimal expected-style carrier. Functions either produce a T or an Error;
// exceptions are reserved for programming mistakes.
template <typename T>
class Result {
 public:
  Result(T value) : state_(std::move(value)) {}          // NOLINT(google-explicit-constructor)
  Result(Error error) : state_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

  bool ok() const noexcept { return std::holds_alternative<T>(state_); }
  explicit operator bool() const noexcept { return ok(); }

  T& value() & {
    if (!ok()) throw ErrorException(std::get<Error>(state_));
    return std::get<T>(state_);
  }
  const T& value() const& {
    if (!ok()) throw ErrorException(std::get<Error>(state_));
    return std::get<T>(state_);
  }
  T&& value() && {
    if (!ok()) throw ErrorException(std::get<Error>(state_));
    return std::move(std::get<T>(state_));
  }

  const Error& error() const { return std::get<Error>(state_); }

  T value_or(T fallback) const {
    return ok() ? std::get<T>(state_) : std::move(fallback);
  }

 private:
  std::variant<T, Error> state_;
};

template <>
class Result<void> {
 public:
  Result() = default;
  Result(Error error) : error_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

  bool ok() const noexcept { return !error_.has_value(); }
  explicit operator bool() const noexcept { return ok(); }

  void value() const {
    if (!ok()) throw ErrorException(*error_);
  }
  const Error& error() const { return *error_; }

 private:
  std::optional<Error> error_;
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse_error: return "parse-error";
    case Errc::validation: return "validation";
    case Errc::privilege: return "privilege";
    case Errc::auth: return "auth";
    case Errc::not_found: return "not-found";
    case Errc::already_exists: return "already-exists";
    case Errc::conflict: return "conflict";
    case Errc::corruption: return "corruption";
    case Errc::immutable: return "immutable";
    case Errc::cycle: return "cycle";
    case Errc::backpressure: return "backpressure";
    case Errc::retryable: return "retryable";
    case Errc::no_changes: return "no-changes";
    case Errc::incomplete_domain: return "incomplete-domain";
    case Errc::config: return "config";
    case Errc::io: return "io";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace dsukit
