#pragma once

#include <stdexcept>
#include <string>

namespace stocknet {

// Invalid or inconsistent input data (bad CSV, non-positive price, ...).
// The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical or model failure (non-convergence, singular matrix, ...).
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stocknet
