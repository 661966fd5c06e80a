#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tracetrim {

// Malformed or semantically invalid caller input (empty sample set, empty path, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A log line that could not be decoded. Carries the 1-based line number (0 when
// the line was parsed in isolation) and the name of the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line_no, std::string field, const std::string& what)
      : std::runtime_error(format(line_no, field, what)),
        line_no_(line_no),
        field_(std::move(field)) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(std::size_t line_no, const std::string& field,
                            const std::string& what) {
    std::string out = "parse error";
    if (line_no != 0) out += " at line " + std::to_string(line_no);
    out += " (field '" + field + "'): " + what;
    return out;
  }

  std::size_t line_no_;
  std::string field_;
};

// Broken internal consistency, e.g. a cycle between episodes.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace tracetrim
