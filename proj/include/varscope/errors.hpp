#pragma once

#include <stdexcept>
#include <string>

namespace varscope {

// Invalid user input: parameters outside their domain, malformed plans or
// files. The CLI maps this to exit code 1.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace varscope
