#pragma once

#include <stdexcept>
#include <string>

namespace sparseho {

// All recoverable failures in the library surface as this type. The message
// is meant for humans; callers branch on the operation that threw.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparseho
