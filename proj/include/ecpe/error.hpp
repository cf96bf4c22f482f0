#pragma once

#include <stdexcept>
#include <string>

namespace ecpe {

// Shape/dimension conflicts between tensors or layers.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed files, bad records, schema violations.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or argument values.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Violated operation contract (non-scalar loss, missing gradients, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace ecpe
