#pragma once

#include <stdexcept>
#include <string>

namespace meshwarp {

// Every recoverable failure in the library (bad input files, contract
// violations on public entry points) is reported with this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace meshwarp
