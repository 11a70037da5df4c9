#pragma once

#include <stdexcept>
#include <string>

namespace drlogit {

// Iterative solver failed to reach its tolerance (includes separation and
// diverging inverse-probability weights).
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A matrix that must be inverted is singular or too badly conditioned.
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace drlogit
