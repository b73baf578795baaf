#pragma once

#include <stdexcept>
#include <string>

namespace hdrm {

/// Classification of failures raised by the library. Non-convergence of
/// iterative solvers is reported through result types, not exceptions;
/// these kinds cover contract violations and numerical dead ends.
enum class ErrorKind {
    invalid_geometry,
    not_found,
    dimension_mismatch,
    numeric,
    singularity,
    breakdown,
    singular_matrix,
    invalid_discretization,
    degenerate_centers,
    non_unique_bc,
    coefficient,
    conflict,
    config,
    geometry,
    validation,
    unsupported,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace hdrm
