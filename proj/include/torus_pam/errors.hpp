/*
 * errors.hpp - exception types shared by every module.
 *
 * DomainError      bad arguments or a precondition that does not hold
 * SingularityError evaluation exactly at a singular point
 * AliasingError    a grid too coarse for the retained Fourier modes
 * NumericError     a series or quadrature that failed to converge
 */

#pragma once

#include <stdexcept>
#include <string>

namespace tpam {

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularityError : DomainError {
    using DomainError::DomainError;
};

struct AliasingError : DomainError {
    using DomainError::DomainError;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw DomainError(message);
}

}  // namespace tpam
