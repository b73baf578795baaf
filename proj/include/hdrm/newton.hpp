#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hdrm/config.hpp"
#include "hdrm/fem.hpp"
#include "hdrm/linalg.hpp"
#include "hdrm/mesh.hpp"
#include "hdrm/problem.hpp"

namespace hdrm {

/// Nonlinear boundary operator B(u) = h(x) collocated at segment nodes.
/// The derivative is checked against finite differences at registration.
struct NonlinearBc {
    std::function<double(double)> B;
    std::function<double(double)> dB;
    ScalarField target;
    int marker = -1;

    static NonlinearBc make(std::function<double(double)> B, std::function<double(double)> dB,
                            ScalarField target, int marker) {
        for (double u : {0.5, 1.0, 1.75}) {
            const double h = 1e-6 * (1.0 + std::abs(u));
            const double fd = (B(u + h) - B(u - h)) / (2.0 * h);
            const double an = dB(u);
            if (std::abs(fd - an) > 1e-5 * (1.0 + std::abs(an)))
                throw Error(ErrorKind::validation,
                            "NonlinearBc: dB_du disagrees with finite differences at u = " +
                                std::to_string(u));
        }
        NonlinearBc bc;
        bc.B = std::move(B);
        bc.dB = std::move(dB);
        bc.target = std::move(target);
        bc.marker = marker;
        return bc;
    }

    static NonlinearBc power_law(double p, ScalarField target, int marker) {
        return make([p](double u) { return std::pow(u, p); },
                    [p](double u) { return p * std::pow(u, p - 1.0); }, std::move(target), marker);
    }
};

namespace detail {

inline std::vector<NonlinearBc> nonlinear_bcs_of(const ProblemSpec& problem) {
    std::vector<NonlinearBc> out;
    for (const auto& [marker, bc] : problem.bcs)
        if (bc.kind == BcKind::nonlinear)
            out.push_back(NonlinearBc::power_law(bc.power, bc.value, marker));
    return out;
}

} // namespace detail

/// Nonlinear residual: interior rows carry the discrete f - L(u) of the
/// assembled system (Dirichlet rows reduce to value - u), rows of
/// nonlinear-boundary nodes carry B(u) - h.
inline Vector residual(const Vector& u, const ProblemSpec& problem, const Mesh& mesh,
                       const std::map<int, double>& extra_dirichlet = {}) {
    if (u.size() != mesh.nodes.size())
        throw Error(ErrorKind::dimension_mismatch, "residual: iterate size mismatch");
    AssembledSystem sys = assemble(mesh, problem, u, extra_dirichlet);
    Vector r = sys.F;
    axpy(-1.0, sys.K.apply(u), r);
    for (const NonlinearBc& bc : detail::nonlinear_bcs_of(problem)) {
        for (int node : nodes_on_marker(mesh, bc.marker)) {
            if (sys.dirichlet_map.count(node)) continue; // corner owned by Dirichlet data
            const Node& nd = mesh.nodes[static_cast<size_t>(node)];
            r[static_cast<size_t>(node)] =
                bc.B(u[static_cast<size_t>(node)]) - bc.target(nd.x, nd.y);
        }
    }
    return r;
}

/// Jacobian of the residual. Analytic mode freezes the coefficients at the
/// iterate (the assembled matrix with its sign flipped) and replaces
/// nonlinear-boundary rows by the diagonal dB/du; finite-difference mode is
/// the matrix-free directional derivative of residual().
inline LinearOperator jacobian(const Vector& u, const ProblemSpec& problem, const Mesh& mesh,
                               JacobianMode mode, double fd_step,
                               const std::map<int, double>& extra_dirichlet = {}) {
    if (fd_step <= 0.0) throw Error(ErrorKind::config, "jacobian: fd_step must be positive");
    if (mode == JacobianMode::finite_difference) {
        auto r0 = std::make_shared<Vector>(residual(u, problem, mesh, extra_dirichlet));
        const double scale = fd_step * (1.0 + norm2(u));
        Vector base = u;
        return [r0, base, &problem, &mesh, extra_dirichlet, scale](const Vector& v) {
            const double vn = norm2(v);
            if (vn == 0.0) return Vector(v.size(), 0.0);
            const double sigma = scale / vn;
            Vector up = base;
            axpy(sigma, v, up);
            Vector rp = residual(up, problem, mesh, extra_dirichlet);
            axpy(-1.0, *r0, rp);
            return scaled(rp, 1.0 / sigma);
        };
    }

    AssembledSystem sys = assemble(mesh, problem, u, extra_dirichlet);
    std::set<int> nl_nodes;
    std::map<int, double> nl_diag;
    for (const NonlinearBc& bc : detail::nonlinear_bcs_of(problem))
        for (int node : nodes_on_marker(mesh, bc.marker)) {
            if (sys.dirichlet_map.count(node)) continue;
            nl_nodes.insert(node);
            nl_diag[node] = bc.dB(u[static_cast<size_t>(node)]);
        }
    std::vector<Triplet> trip;
    sys.K.for_each_entry([&](int i, int j, double& v) {
        if (nl_nodes.count(i)) return;
        trip.push_back({i, j, -v});
    });
    for (const auto& [node, d] : nl_diag) trip.push_back({node, node, d});
    auto J = std::make_shared<SparseMatrix>(
        SparseMatrix::from_triplets(sys.K.rows(), sys.K.cols(), std::move(trip)));
    return [J](const Vector& v) { return J->apply(v); };
}

struct NewtonTraceEntry {
    int iteration = 0;
    double residual_norm = 0.0;
    double step_h1 = 0.0;
    int inner_iterations = 0;
};

struct NewtonResult {
    Vector u;
    std::vector<NewtonTraceEntry> trace;
    bool converged = false;
    std::string stop_reason; // residual | step_h1 | max_iter
    double final_residual_norm = 0.0;

    int iterations() const { return static_cast<int>(trace.size()); }
};

/// `iter, residual_norm, step_H1, inner_iters` per outer iteration.
inline void write_newton_trace_csv(const NewtonResult& result, std::ostream& os) {
    os << "iter,residual_norm,step_H1,inner_iters\n";
    char buf[128];
    for (const NewtonTraceEntry& t : result.trace) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%d\n", t.iteration, t.residual_norm,
                      t.step_h1, t.inner_iterations);
        os << buf;
    }
}

/// Newton-Krylov outer loop: J(u) du = -R(u) solved by restarted GMRES,
/// damped update, convergence on the residual norm or on the H1 norm of
/// the step. Divergence is reported through the result, not thrown.
inline NewtonResult newton_krylov_solve(Vector u0, const ProblemSpec& problem, const Mesh& mesh,
                                        const NewtonConfig& config,
                                        const std::map<int, double>& extra_dirichlet = {}) {
    config.validate();
    if (u0.empty()) u0.assign(mesh.nodes.size(), 0.0);
    if (u0.size() != mesh.nodes.size())
        throw Error(ErrorKind::dimension_mismatch, "newton: u0 size mismatch");

    // Pin Dirichlet data on the start iterate so those rows begin satisfied.
    for (const auto& [marker, bc] : problem.bcs)
        if (bc.kind == BcKind::dirichlet)
            for (int node : nodes_on_marker(mesh, marker)) {
                const Node& nd = mesh.nodes[static_cast<size_t>(node)];
                u0[static_cast<size_t>(node)] = bc.value(nd.x, nd.y);
            }
    for (const auto& [node, value] : extra_dirichlet) u0[static_cast<size_t>(node)] = value;

    // A matrix-free difference quotient carries O(fd_step) relative noise;
    // asking the Krylov solver for more than that only stalls it.
    const double inner_tol = config.jacobian_mode == JacobianMode::finite_difference
                                 ? std::max(config.inner_tol, 10.0 * config.fd_step)
                                 : config.inner_tol;

    NewtonResult result;
    result.u = std::move(u0);
    for (int n = 0; n < config.max_iter; ++n) {
        Vector r = residual(result.u, problem, mesh, extra_dirichlet);
        const double rn = norm2(r);
        if (rn <= config.tol_residual) {
            result.trace.push_back({n, rn, 0.0, 0});
            result.converged = true;
            result.stop_reason = "residual";
            result.final_residual_norm = rn;
            return result;
        }
        LinearOperator J = jacobian(result.u, problem, mesh, config.jacobian_mode,
                                    config.fd_step, extra_dirichlet);
        Vector du;
        SolveStats inner;
        try {
            std::tie(du, inner) = gmres(J, scaled(r, -1.0), {}, inner_tol,
                                        config.inner_max_iter, config.inner_restart);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::breakdown)
                throw Error(ErrorKind::breakdown,
                            "newton iteration " + std::to_string(n) + ": " + e.what());
            throw;
        }
        Vector step = scaled(du, config.damping);
        const double step_h1 = norm(step, NormKind::h1, mesh);
        result.trace.push_back({n, rn, step_h1, inner.iterations});
        axpy(1.0, step, result.u);
        if (step_h1 < config.tol_step_h1) {
            result.converged = true;
            result.stop_reason = "step_h1";
            result.final_residual_norm = norm2(residual(result.u, problem, mesh, extra_dirichlet));
            return result;
        }
    }
    result.final_residual_norm = norm2(residual(result.u, problem, mesh, extra_dirichlet));
    result.converged = result.final_residual_norm <= config.tol_residual;
    result.stop_reason = result.converged ? "residual" : "max_iter";
    return result;
}

} // namespace hdrm
