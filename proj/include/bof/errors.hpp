#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bof {

// Invalid parameters or configuration supplied by the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be used: malformed files, mismatched corpora.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A binary or text file that does not follow its format. `offset` is the
// byte position at which parsing failed.
class FormatError : public DataError {
 public:
  FormatError(const std::string& path, std::uint64_t offset, const std::string& what)
      : DataError(path + ": byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// An internal consistency check failed.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace bof
