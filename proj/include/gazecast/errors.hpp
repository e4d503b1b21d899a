#pragma once

#include <stdexcept>

namespace gazecast {

/// Malformed input data (session files, checkpoints, saliency maps).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values where finite math was required (NaN loss, inf gradient).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gazecast
