#pragma once

#include <stdexcept>

namespace wsd {

// Exit-code conventions for the CLI: 1 = config/usage, 2 = data validation,
// 3 = numeric failure.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wsd
