#pragma once

#include <stdexcept>
#include <string>

namespace edflow {

// A scenario record violates a parameter invariant. `field()` names the
// offending ModelParams field (or config key).
class ParameterError : public std::invalid_argument {
public:
    ParameterError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// The urgent queue is not positive recurrent for the requested capacity mode.
class StabilityError : public std::runtime_error {
public:
    StabilityError(double intensity, const std::string& what)
        : std::runtime_error(what), intensity_(intensity) {}

    double intensity() const noexcept { return intensity_; }

private:
    double intensity_;
};

// The solver produced something it cannot vouch for (singular boundary system,
// negative probabilities beyond round-off, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace edflow
