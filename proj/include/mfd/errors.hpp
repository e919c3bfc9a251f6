#pragma once

#include <stdexcept>
#include <string>

namespace mfd {

// Caller handed us something malformed (asymmetry, bad sizes, bad flags).
class invalid_input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Not enough distance entries / samples to satisfy a precondition.
class insufficient_data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Geometric rank collapse: coincident points, collinear projections, ...
class degenerate_input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A solver broke down (eigensolver failure, non-SPD metric, ...).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// CLI-level misuse; maps to exit code 2.
class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mfd
