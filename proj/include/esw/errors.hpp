#pragma once

#include <stdexcept>
#include <string>

namespace esw {

// Malformed or truncated input file. Message carries the byte offset of the
// first inconsistency where known.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver failed to reach the requested tolerance.
class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

} // namespace esw
