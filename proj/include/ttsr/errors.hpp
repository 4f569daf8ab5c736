#pragma once

#include <stdexcept>
#include <string>

namespace ttsr {

// One config error message may list several violated invariants.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RemoteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ttsr
