#pragma once

#include <stdexcept>
#include <string>

namespace geoprog {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

// Malformed persisted data; carries the offending record line when known.
struct SchemaError : Error {
  explicit SchemaError(const std::string& msg, long line_no = -1)
      : Error(line_no >= 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
        line(line_no) {}
  long line = -1;
};

struct UnknownImageError : Error {
  using Error::Error;
};

}  // namespace geoprog
