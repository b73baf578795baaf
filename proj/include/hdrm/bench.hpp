#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hdrm/adapt.hpp"
#include "hdrm/hybrid.hpp"
#include "hdrm/linalg.hpp"
#include "hdrm/newton.hpp"
#include "hdrm/problem.hpp"

namespace hdrm {

inline const std::vector<long> bench_checkpoints = {1, 100, 1000, 5000, 10000, 50000, 100000};

struct SolverReport {
    std::string method;
    double final_error = std::numeric_limits<double>::quiet_NaN(); // L2 against exact
    long iterations = 0;
    double wall_seconds = 0.0;
    bool converged = false;
    std::vector<std::pair<long, double>> trace; // (iteration, error)
    std::string rate_label;
    Vector solution; // nodal values on `mesh`
    Mesh mesh;       // discretization the method ran on
};

struct BenchmarkReport {
    std::vector<SolverReport> methods;
    std::vector<std::vector<double>> delta; // |E_i - E_j|, symmetric, zero diagonal
};

/// Pairwise absolute error differences.
inline std::vector<std::vector<double>> delta_table(const std::vector<double>& errors) {
    const size_t n = errors.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) d[i][j] = std::abs(errors[i] - errors[j]);
    return d;
}

/// Qualitative convergence-rate label from the log-log slope of the error
/// trace: slope <= -1 Fast, <= -0.5 Moderate, shallower Slow. Single-point
/// traces (direct solves) count as Fast.
inline std::string rate_label_of(const std::vector<std::pair<long, double>>& trace) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [it, err] : trace)
        if (it >= 1 && err > 0.0 && std::isfinite(err))
            pts.push_back({std::log10(static_cast<double>(it)), std::log10(err)});
    if (pts.size() < 2) return "Fast";
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double denom = n * sxx - sx * sx;
    if (denom <= 1e-12) return "Fast"; // all checkpoints at one abscissa
    const double slope = (n * sxy - sx * sy) / denom;
    if (slope <= -1.0) return "Fast";
    if (slope <= -0.5) return "Moderate";
    return "Slow";
}

/// The classical iterative baselines cannot collocate a nonlinear boundary
/// condition; u^p = h is inverted pointwise into Dirichlet data before
/// handing the problem to them.
inline ProblemSpec reduce_nonlinear_pointwise(const ProblemSpec& spec) {
    ProblemSpec reduced = spec;
    for (auto& [marker, bc] : reduced.bcs) {
        if (bc.kind != BcKind::nonlinear) continue;
        const ScalarField target = bc.value;
        const double p = bc.power;
        bc.kind = BcKind::dirichlet;
        bc.value = [target, p](double x, double y) {
            const double h = target(x, y);
            return std::copysign(std::pow(std::abs(h), 1.0 / p), h);
        };
        bc.power = 1.0;
    }
    return reduced;
}

namespace detail {

inline double l2_error_or_nan(const Vector& u, const ProblemSpec& spec, const Mesh& mesh) {
    if (!spec.has_exact()) return std::numeric_limits<double>::quiet_NaN();
    return error_function(u, spec.exact, mesh);
}

/// Explicit pseudo-time relaxation u <- u + dt (F - K u) with the step
/// from a Gershgorin bound on the spectrum.
inline void dynamic_relaxation_sweeps(const SparseMatrix& K, const Vector& F, Vector& u,
                                      long count) {
    double max_row = 0.0;
    for (int i = 0; i < K.rows(); ++i) {
        double s = 0.0;
        for (int k = K.row_begin(i); k < K.row_end(i); ++k) s += std::abs(K.entry_value(k));
        max_row = std::max(max_row, s);
    }
    const double dt = 1.0 / max_row;
    for (long it = 0; it < count; ++it) {
        Vector r = F;
        axpy(-1.0, K.apply(u), r);
        axpy(dt, r, u);
    }
}

/// FEM region for the hybrid method: elements touching nonlinear segments,
/// grown by the configured number of layers. Problems without nonlinear
/// segments get an empty region (the solve degenerates to pure DRM).
inline RegionPartition bench_partition(const ProblemSpec& spec, const Mesh& mesh) {
    std::set<int> markers;
    for (const auto& [marker, bc] : spec.bcs)
        if (bc.kind == BcKind::nonlinear) markers.insert(marker);
    if (markers.empty()) return partition_domain(mesh, std::set<int>{});
    std::set<int> seed = elements_touching_markers(mesh, markers);
    return partition_domain(mesh, grow_element_set(mesh, seed, spec.bench.hdrm_patch_layers));
}

} // namespace detail

/// Runs one method of the comparison at its configured resolution and
/// budget, recording the error trace at the iteration checkpoints.
inline SolverReport run_method(const ProblemSpec& spec, const std::string& method) {
    SolverReport report;
    report.method = method;
    const auto t0 = std::chrono::steady_clock::now();

    if (method == "gauss_seidel" || method == "dynamic_relaxation") {
        const bool gs = method == "gauss_seidel";
        const int nx = gs ? spec.bench.gauss_seidel_nx : spec.bench.dynamic_relaxation_nx;
        const long budget =
            gs ? spec.bench.gauss_seidel_max_iter : spec.bench.dynamic_relaxation_max_iter;
        ProblemSpec reduced = reduce_nonlinear_pointwise(spec);
        Mesh mesh = build_rect_mesh(nx, nx, spec.rect);
        AssembledSystem sys = assemble(mesh, reduced, {});
        Vector u(mesh.nodes.size(), 0.0);
        const double fnorm = norm2(sys.F);
        long done = 0;
        bool converged = false;
        for (long cp : bench_checkpoints) {
            if (cp > budget) break;
            if (!converged) {
                if (gs) {
                    auto [x, st] = gauss_seidel(sys.K, sys.F, u, 1e-12, static_cast<int>(cp - done));
                    u = std::move(x);
                    done += st.iterations;
                    converged = st.converged;
                } else {
                    detail::dynamic_relaxation_sweeps(sys.K, sys.F, u, cp - done);
                    done = cp;
                    Vector r = sys.F;
                    axpy(-1.0, sys.K.apply(u), r);
                    converged = norm2(r) <= 1e-12 * (fnorm > 0 ? fnorm : 1.0);
                }
            }
            report.trace.push_back({done, detail::l2_error_or_nan(u, spec, mesh)});
            if (converged) break;
        }
        report.iterations = done;
        report.converged = converged || done >= budget;
        report.final_error = detail::l2_error_or_nan(u, spec, mesh);
        if (report.trace.empty() || report.trace.back().first != done)
            report.trace.push_back({done, report.final_error});
        report.solution = std::move(u);
        report.mesh = std::move(mesh);
    } else if (method == "dual_reciprocity") {
        ProblemSpec reduced = reduce_nonlinear_pointwise(spec);
        Mesh mesh = build_rect_mesh(spec.bench.dual_reciprocity_nx,
                                    spec.bench.dual_reciprocity_nx, spec.rect);
        HybridSolution sol = drm_nodal_solve(reduced, mesh);
        report.iterations = 1;
        report.converged = true;
        report.final_error = detail::l2_error_or_nan(sol.u, spec, mesh);
        report.trace.push_back({1, report.final_error});
        report.solution = std::move(sol.u);
        report.mesh = std::move(mesh);
    } else if (method == "hdrm") {
        Mesh mesh = build_rect_mesh(spec.bench.hdrm_nx, spec.bench.hdrm_nx, spec.rect);
        RegionPartition part = detail::bench_partition(spec, mesh);
        std::vector<std::pair<long, double>> trace;
        SweepObserver observer = [&](int sweep, const Vector& u) {
            trace.push_back({sweep, detail::l2_error_or_nan(u, spec, mesh)});
        };
        HybridSolution sol =
            hybrid_solve(spec, mesh, part, spec.hybrid, spec.newton, observer);
        report.iterations = sol.sweeps;
        report.converged = sol.converged;
        report.trace = std::move(trace);
        report.final_error = detail::l2_error_or_nan(sol.u, spec, mesh);
        report.solution = std::move(sol.u);
        report.mesh = std::move(mesh);
    } else {
        throw Error(ErrorKind::validation, "unknown method '" + method + "'");
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/// Runs every listed method and assembles the error and pairwise
/// difference tables.
inline BenchmarkReport compare_methods(const ProblemSpec& spec) {
    if (!spec.has_exact())
        throw Error(ErrorKind::validation,
                    "compare_methods: the comparison needs an exact solution");
    if (spec.methods.empty())
        throw Error(ErrorKind::validation, "compare_methods: empty method list");
    BenchmarkReport report;
    std::vector<double> errors;
    for (const std::string& m : spec.methods) {
        SolverReport r = run_method(spec, m);
        r.rate_label = rate_label_of(r.trace);
        errors.push_back(r.final_error);
        report.methods.push_back(std::move(r));
    }
    report.delta = delta_table(errors);
    return report;
}

namespace detail {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Writes convergence.csv, errors.csv, delta.csv and one gnuplot series
/// file per method. Output is byte-stable across runs: wall times stay out
/// of the files and all numbers use a fixed format.
inline void emit_outputs(const BenchmarkReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "convergence.csv");
        if (!os) throw Error(ErrorKind::io, "emit_outputs: cannot write convergence.csv");
        os << "method,iteration,error\n";
        for (const SolverReport& r : report.methods)
            for (const auto& [it, err] : r.trace)
                os << r.method << ',' << it << ',' << detail::csv_num(err) << "\n";
    }
    {
        std::ofstream os(fs::path(out_dir) / "errors.csv");
        if (!os) throw Error(ErrorKind::io, "emit_outputs: cannot write errors.csv");
        os << "# rate labels: log-log slope <= -1 Fast, <= -0.5 Moderate, else Slow\n";
        os << "method,final_error,iterations,rate\n";
        for (const SolverReport& r : report.methods)
            os << r.method << ',' << detail::csv_num(r.final_error) << ',' << r.iterations << ','
               << r.rate_label << "\n";
    }
    {
        std::ofstream os(fs::path(out_dir) / "delta.csv");
        if (!os) throw Error(ErrorKind::io, "emit_outputs: cannot write delta.csv");
        os << "method_i,method_j,delta_e\n";
        for (size_t i = 0; i < report.methods.size(); ++i)
            for (size_t j = i + 1; j < report.methods.size(); ++j)
                os << report.methods[i].method << ',' << report.methods[j].method << ','
                   << detail::csv_num(report.delta[i][j]) << "\n";
    }
    for (const SolverReport& r : report.methods) {
        std::ofstream os(fs::path(out_dir) / ("series_" + r.method + ".dat"));
        if (!os) throw Error(ErrorKind::io, "emit_outputs: cannot write series file");
        os << "# iteration error\n";
        for (const auto& [it, err] : r.trace)
            os << it << ' ' << detail::csv_num(err) << "\n";
    }
}

inline void print_report(const BenchmarkReport& report, std::ostream& os) {
    os << "method                final_error  iterations  rate      wall_s\n";
    char buf[160];
    for (const SolverReport& r : report.methods) {
        std::snprintf(buf, sizeof buf, "%-20s  %11.4e  %10ld  %-8s  %.3f\n", r.method.c_str(),
                      r.final_error, r.iterations, r.rate_label.c_str(), r.wall_seconds);
        os << buf;
    }
    os << "pairwise |E_i - E_j|:\n";
    for (size_t i = 0; i < report.methods.size(); ++i)
        for (size_t j = i + 1; j < report.methods.size(); ++j) {
            std::snprintf(buf, sizeof buf, "  %s vs %s: %.4e\n", report.methods[i].method.c_str(),
                          report.methods[j].method.c_str(), report.delta[i][j]);
            os << buf;
        }
}

} // namespace hdrm
