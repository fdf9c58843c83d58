#pragma once

#include <stdexcept>
#include <string>

namespace nearcomm {

/// Malformed or out-of-contract input (shape, finiteness, tolerance violations).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A matrix that had to be inverted (or polar-decomposed without
/// regularization) turned out to be numerically singular.
class SingularityError : public std::runtime_error {
public:
    SingularityError(const std::string& what, double singular_value)
        : std::runtime_error(what), singular_value_(singular_value) {}

    double singular_value() const noexcept { return singular_value_; }

private:
    double singular_value_;
};

/// Mapping a pre-retraction homotopy sample onto the unitary group failed.
class RetractionError : public std::runtime_error {
public:
    RetractionError(const std::string& what, int stage, double t)
        : std::runtime_error(what), stage_(stage), t_(t) {}

    int stage() const noexcept { return stage_; }
    double t() const noexcept { return t_; }

private:
    int stage_;
    double t_;
};

/// Instance generation could not meet the requested parameters.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nearcomm
