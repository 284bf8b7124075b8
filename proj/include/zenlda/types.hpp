#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zenlda {

using WordId = std::int32_t;
using DocId = std::int32_t;
using TopicId = std::int32_t;
using Count = std::int32_t;

// Raised when input text cannot be parsed (corpus files, checkpoints).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a model or data-structure invariant is violated.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised on invalid configuration or argument values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zenlda
