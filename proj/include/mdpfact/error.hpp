#pragma once

#include <stdexcept>
#include <string>

namespace mdpfact {

// Single exception type for all contract violations and I/O failures.
// Messages carry enough location detail (file, row, column) to be actionable.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace mdpfact
