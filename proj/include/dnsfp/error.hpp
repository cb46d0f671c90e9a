#pragma once

#include <stdexcept>
#include <string>

namespace dnsfp {

// Problem with input data or configuration values. The CLI maps this to
// exit code 2; usage errors exit with 1.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dnsfp
