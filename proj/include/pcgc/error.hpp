#pragma once

#include <stdexcept>
#include <string>

namespace pcgc {

// Malformed input: bad files, out-of-range arguments, inconsistent layouts.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input failed to parse; carries the 1-based line number when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A stream or model failed an integrity check (hash, structure, round trip).
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcgc
