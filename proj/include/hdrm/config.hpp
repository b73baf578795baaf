#pragma once

#include <string>

#include "hdrm/errors.hpp"

namespace hdrm {

enum class JacobianMode { analytic, finite_difference };

/// Outer Newton-Krylov controls. Convergence fires on the residual norm or
/// on the H1 norm of the update step, whichever happens first.
struct NewtonConfig {
    double tol_residual = 1e-10;
    double tol_step_h1 = 1e-13;
    int max_iter = 30;
    JacobianMode jacobian_mode = JacobianMode::analytic;
    double fd_step = 1.4901161193847656e-8; // sqrt(machine epsilon), scaled by (1+||u||)
    double damping = 1.0;
    double inner_tol = 1e-10;
    int inner_max_iter = 5000;
    int inner_restart = 50;

    bool operator==(const NewtonConfig&) const = default;

    void validate() const {
        if (tol_residual <= 0 || tol_step_h1 <= 0)
            throw Error(ErrorKind::config, "newton: tolerances must be positive");
        if (max_iter < 1) throw Error(ErrorKind::config, "newton: max_iter must be >= 1");
        if (damping <= 0 || damping > 1)
            throw Error(ErrorKind::config, "newton: damping must be in (0, 1]");
        if (fd_step <= 0) throw Error(ErrorKind::config, "newton: fd_step must be positive");
    }
};

/// Adaptive-refinement controls. `marking_fraction` = 0 selects the
/// absolute-threshold rule |grad u| > epsilon; a value in (0,1] switches to
/// marking that fraction of elements with the largest indicators.
struct RefinementConfig {
    double epsilon = 1.0;
    double delta = 1e-10;
    int max_generations = 3;
    double marking_fraction = 0.0;

    bool operator==(const RefinementConfig&) const = default;

    void validate() const {
        if (epsilon <= 0) throw Error(ErrorKind::config, "refine: epsilon must be positive");
        if (delta <= 0) throw Error(ErrorKind::config, "refine: delta must be positive");
        if (max_generations < 0)
            throw Error(ErrorKind::config, "refine: max_generations must be >= 0");
        if (marking_fraction < 0 || marking_fraction > 1)
            throw Error(ErrorKind::config, "refine: marking_fraction must be in [0, 1]");
    }
};

/// Region-coupling controls for the hybrid solve.
struct HybridConfig {
    double coupling_tol = 1e-6;
    int max_sweeps = 100;
    int overlap_layers = 1;

    bool operator==(const HybridConfig&) const = default;

    void validate() const {
        if (coupling_tol <= 0) throw Error(ErrorKind::config, "hybrid: coupling_tol must be positive");
        if (max_sweeps < 1) throw Error(ErrorKind::config, "hybrid: max_sweeps must be >= 1");
        if (overlap_layers < 0) throw Error(ErrorKind::config, "hybrid: overlap_layers must be >= 0");
    }
};

/// Per-method discretization sizes and iteration budgets for the
/// benchmark comparison. Each baseline runs at its own resolution; the
/// shipped benchmark files pick values so every method finishes within
/// its budget.
struct BenchConfig {
    int gauss_seidel_nx = 10;
    long gauss_seidel_max_iter = 100000;
    int dynamic_relaxation_nx = 12;
    long dynamic_relaxation_max_iter = 100000;
    int dual_reciprocity_nx = 16;
    int hdrm_nx = 32;
    int hdrm_patch_layers = 2;

    bool operator==(const BenchConfig&) const = default;

    void validate() const {
        if (gauss_seidel_nx < 1 || dynamic_relaxation_nx < 1 || dual_reciprocity_nx < 1 ||
            hdrm_nx < 1)
            throw Error(ErrorKind::config, "bench: mesh sizes must be >= 1");
        if (gauss_seidel_max_iter < 1 || dynamic_relaxation_max_iter < 1)
            throw Error(ErrorKind::config, "bench: iteration budgets must be >= 1");
        if (hdrm_patch_layers < 0)
            throw Error(ErrorKind::config, "bench: patch layers must be >= 0");
    }
};

} // namespace hdrm
