#pragma once

#include <stdexcept>
#include <string>

namespace efpsa {

/// Bad input: malformed config, out-of-range parameter, dimension mismatch.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The numbers went wrong: singular matrix, failed tolerance, non-convergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace efpsa
