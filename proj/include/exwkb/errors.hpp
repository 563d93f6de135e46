#pragma once

#include <stdexcept>
#include <string>

namespace exwkb {

/// Invalid user input or violated precondition. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (step collapse, non-convergence). Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace exwkb
