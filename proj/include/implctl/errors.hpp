#pragma once

#include <stdexcept>
#include <string>

namespace implctl {

/// Raised when an abscissa falls outside [0, total_length].
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Raised when an input violates a documented precondition (|θ̃| ≥ π/2, v ≤ 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a model denominator approaches zero: 1 - c·y (robot at the
/// osculating-circle center) or 1 - γ·I_y.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter set or path descriptor. `key()` names the offending
/// field when one is known.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& message, std::string key = {})
        : std::invalid_argument(message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Threshold used by every singularity guard.
inline constexpr double kSingularityEps = 1e-6;

}  // namespace implctl
