#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace skrock {

// Bad user-facing configuration or arguments (CLI exit code 1).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A quantity left the representable double range (e.g. T_i(omega0) for
// extreme stage counts / damping).
struct CapacityError : std::overflow_error {
    using std::overflow_error::overflow_error;
};

// Mathematically undefined request (c^2 < 0, |A(p)| >= 1, ...).
struct NumericDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// An operation was called on a problem that does not support it
// (missing exact solution, non-additive noise, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Too few usable rows for a convergence fit.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A trajectory produced a non-finite component (CLI exit code 2).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::int64_t step, int stage, const std::string& what_arg)
        : std::runtime_error(what_arg), step_(step), stage_(stage) {}

    std::int64_t step() const noexcept { return step_; }
    int stage() const noexcept { return stage_; }

private:
    std::int64_t step_;
    int stage_;
};

} // namespace skrock
