#ifndef DISDEL_ERROR_HPP
#define DISDEL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace disdel {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative numerical procedure failed (no bracket, no convergence,
/// singular matrix, step-size underflow, ...).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const char* what)
{
    if (!condition)
        throw DomainError(what);
}

inline void require(bool condition, const std::string& what)
{
    if (!condition)
        throw DomainError(what);
}

} // namespace detail
} // namespace disdel

#endif // DISDEL_ERROR_HPP
