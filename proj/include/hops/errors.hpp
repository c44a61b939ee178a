#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hops {

// Root of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed binary file; carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ValidationError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class DuplicateSourceError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

// A query set leaked into the references it is evaluated against.
class LeakageError : public Error { using Error::Error; };

// Bad command-line usage. The CLI maps this to exit code 2.
class UsageError : public Error { using Error::Error; };

}  // namespace hops
