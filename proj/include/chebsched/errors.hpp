#pragma once

#include <stdexcept>
#include <string>

namespace chebsched {

/// Precondition violation on a numeric argument (non-positive m, M < m, ...).
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The fractal construction only exists for power-of-two horizons.
class unsupported_horizon : public invalid_argument {
public:
    explicit unsupported_horizon(const std::string& what)
        : invalid_argument(what) {}
};

class dimension_mismatch : public invalid_argument {
public:
    using invalid_argument::invalid_argument;
};

/// Raised when the Cholesky factorization of a supposedly SPD matrix fails.
class not_positive_definite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const char* message) {
    if (!ok) throw invalid_argument(message);
}

}  // namespace detail
}  // namespace chebsched
