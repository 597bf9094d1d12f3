#pragma once

#include <stdexcept>
#include <string>

namespace hbp {

// Malformed textual input (Matrix Market banner, size line, entries).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural violation in a stored or deserialized HBP matrix.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hbp
