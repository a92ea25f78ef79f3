#pragma once

#include <stdexcept>
#include <string>

namespace knet {

// Non-finite state or a diverged integration.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Device law that cannot be evaluated as a generic branch current.
struct unsupported_device : std::invalid_argument {
    explicit unsupported_device(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed config file or CLI arguments.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace knet
