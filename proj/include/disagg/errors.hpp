#pragma once

#include <stdexcept>

namespace disagg {

// Validation problems (bad input, bad configuration) are reported as std::invalid_argument.
// Numerical failures of an otherwise valid computation use NumericalError.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace disagg
