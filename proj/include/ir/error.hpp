#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ir {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based (the header is line 1); 0 when
/// the problem is not tied to a line.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::size_t line, std::string column = {})
      : Error(what), line_(line), column_(std::move(column)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

/// A request, predicate, config or spec does not fit the data it targets.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Every measure of an analysis came out undefined.
class AllUndefinedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ir
