#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "hdrm/linalg.hpp"
#include "hdrm/mesh.hpp"
#include "hdrm/problem.hpp"
#include "hdrm/quadrature.hpp"

namespace hdrm {

/// Barycentric P1 shape functions of one element: values at a reference
/// point and the constant physical gradients.
struct ShapeFunctions {
    std::array<Vec2, 3> grads;

    static ShapeFunctions on(const Mesh& mesh, int element_id) {
        auto p = mesh.element_coords(element_id);
        const double det = mesh.element_signed_area2(element_id);
        ShapeFunctions s;
        s.grads[0] = {(p[1].y - p[2].y) / det, (p[2].x - p[1].x) / det};
        s.grads[1] = {(p[2].y - p[0].y) / det, (p[0].x - p[2].x) / det};
        s.grads[2] = {(p[0].y - p[1].y) / det, (p[1].x - p[0].x) / det};
        return s;
    }

    static std::array<double, 3> values_at(double xi, double eta) {
        return {1.0 - xi - eta, xi, eta};
    }
};

/// Assembled linear system K u = F together with the applied Dirichlet
/// constraints (symmetric elimination keeps K's symmetry).
struct AssembledSystem {
    SparseMatrix K;
    Vector F;
    std::map<int, double> dirichlet_map;
};

namespace detail {
inline void check_spd(const Mat2& a, double x, double y) {
    const double scale = std::abs(a.a11) + std::abs(a.a22) + 1e-300;
    if (std::abs(a.a12 - a.a21) > 1e-12 * scale || a.a11 <= 0.0 ||
        a.a11 * a.a22 - a.a12 * a.a21 <= 0.0)
        throw Error(ErrorKind::coefficient,
                    "A is not symmetric positive definite at (" + std::to_string(x) + ", " +
                        std::to_string(y) + ")");
}
} // namespace detail

/// Element stiffness block
///   K_e(i,j) = int_e ( grad N_i . A(x,u) grad N_j + (B(x,u) . grad N_j) N_i )
/// with A, B frozen at the current iterate (Picard linearization). The
/// reaction coefficient C enters the force vector in assemble(), not here.
inline std::array<std::array<double, 3>, 3>
element_stiffness(const Mesh& mesh, int element_id, const CoefficientA& A,
                  const CoefficientB& B, const Vector& u_current, const QuadratureRule& rule) {
    const Element& e = mesh.element(element_id);
    auto p = mesh.element_coords(element_id);
    const double jac = mesh.element_signed_area2(element_id);
    const ShapeFunctions sf = ShapeFunctions::on(mesh, element_id);

    std::array<double, 3> ue{0.0, 0.0, 0.0};
    if (!u_current.empty())
        for (int k = 0; k < 3; ++k)
            ue[static_cast<size_t>(k)] = u_current[static_cast<size_t>(e.node_ids[static_cast<size_t>(k)])];

    std::array<std::array<double, 3>, 3> ke{};
    for (size_t q = 0; q < rule.points.size(); ++q) {
        const double xi = rule.points[q].x, eta = rule.points[q].y;
        const auto N = ShapeFunctions::values_at(xi, eta);
        const double x = p[0].x + (p[1].x - p[0].x) * xi + (p[2].x - p[0].x) * eta;
        const double y = p[0].y + (p[1].y - p[0].y) * xi + (p[2].y - p[0].y) * eta;
        const double uq = N[0] * ue[0] + N[1] * ue[1] + N[2] * ue[2];
        const Mat2 a = A ? A(x, y, uq) : Mat2{};
        detail::check_spd(a, x, y);
        const Vec2 b = B ? B(x, y, uq) : Vec2{0, 0};
        const double w = rule.weights[q] * jac;
        for (int i = 0; i < 3; ++i) {
            const Vec2 gi = sf.grads[static_cast<size_t>(i)];
            for (int j = 0; j < 3; ++j) {
                const Vec2 gj = sf.grads[static_cast<size_t>(j)];
                const double diff = gi.x * (a.a11 * gj.x + a.a12 * gj.y) +
                                    gi.y * (a.a21 * gj.x + a.a22 * gj.y);
                const double adv = (b.x * gj.x + b.y * gj.y) * N[static_cast<size_t>(i)];
                ke[static_cast<size_t>(i)][static_cast<size_t>(j)] += w * (diff + adv);
            }
        }
    }
    return ke;
}

/// Element load vector F_e(i) = int_e N_i f.
template <class F>
std::array<double, 3> element_force(const Mesh& mesh, int element_id, F&& f,
                                    const QuadratureRule& rule) {
    auto p = mesh.element_coords(element_id);
    const double jac = mesh.element_signed_area2(element_id);
    std::array<double, 3> fe{};
    for (size_t q = 0; q < rule.points.size(); ++q) {
        const double xi = rule.points[q].x, eta = rule.points[q].y;
        const auto N = ShapeFunctions::values_at(xi, eta);
        const double x = p[0].x + (p[1].x - p[0].x) * xi + (p[2].x - p[0].x) * eta;
        const double y = p[0].y + (p[1].y - p[0].y) * xi + (p[2].y - p[0].y) * eta;
        const double v = f(x, y);
        detail::check_finite(v, x, y);
        const double w = rule.weights[q] * jac;
        for (int i = 0; i < 3; ++i) fe[static_cast<size_t>(i)] += w * N[static_cast<size_t>(i)] * v;
    }
    return fe;
}

/// Adds the Neumann contribution int_edge g N_i to the load entries of the
/// edge's two nodes.
template <class G>
void apply_neumann(AssembledSystem& sys, const Mesh& mesh, const BoundaryEdge& edge, G&& g,
                   const QuadratureRule& rule) {
    const Node& a = mesh.nodes[static_cast<size_t>(edge.node_ids[0])];
    const Node& b = mesh.nodes[static_cast<size_t>(edge.node_ids[1])];
    const double jac = 0.5 * std::hypot(b.x - a.x, b.y - a.y);
    double f0 = 0.0, f1 = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q) {
        const double t = 0.5 * (1.0 + rule.points[q].x);
        const double x = a.x + (b.x - a.x) * t;
        const double y = a.y + (b.y - a.y) * t;
        const double v = g(x, y);
        detail::check_finite(v, x, y);
        f0 += rule.weights[q] * jac * (1.0 - t) * v;
        f1 += rule.weights[q] * jac * t * v;
    }
    sys.F[static_cast<size_t>(edge.node_ids[0])] += f0;
    sys.F[static_cast<size_t>(edge.node_ids[1])] += f1;
}

/// Symmetric elimination of Dirichlet constraints: constrained rows and
/// columns are zeroed with a unit diagonal, and the right-hand side is
/// shifted so the unconstrained equations are unchanged.
inline void apply_dirichlet(AssembledSystem& sys, const std::map<int, double>& constraints) {
    for (const auto& [node, value] : constraints) {
        auto it = sys.dirichlet_map.find(node);
        if (it != sys.dirichlet_map.end() &&
            std::abs(it->second - value) > 1e-12 * (1.0 + std::abs(value)))
            throw Error(ErrorKind::conflict,
                        "conflicting Dirichlet values at node " + std::to_string(node));
        sys.dirichlet_map[node] = value;
    }
    if (constraints.empty()) return;
    sys.K.for_each_entry([&](int i, int j, double& v) {
        const bool ci = constraints.count(i) > 0;
        if (ci) {
            v = (i == j) ? 1.0 : 0.0;
            return;
        }
        auto jt = constraints.find(j);
        if (jt != constraints.end()) {
            sys.F[static_cast<size_t>(i)] -= v * jt->second;
            v = 0.0;
        }
    });
    for (const auto& [node, value] : constraints) sys.F[static_cast<size_t>(node)] = value;
}

/// Global assembly for the operator
///   -div(A grad u) + B . grad u + C(x,u) = f
/// at the current iterate: deterministic scatter-add of element blocks,
/// C folded into the load (f - C), Neumann then Dirichlet application.
/// Nodes of nonlinear segments are left unconstrained; the newton module
/// owns those rows. `extra_dirichlet` lets callers pin additional nodes
/// (interface data in the hybrid coupling).
inline AssembledSystem assemble(const Mesh& mesh, const ProblemSpec& problem,
                                const Vector& u_current,
                                const std::map<int, double>& extra_dirichlet = {}) {
    const int n = mesh.node_count();
    const QuadratureRule& rule = triangle_rule(2);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(mesh.element_count()) * 9 + static_cast<size_t>(n));
    AssembledSystem sys;
    sys.F.assign(static_cast<size_t>(n), 0.0);

    for (const Element& e : mesh.elements) {
        const auto ke = element_stiffness(mesh, e.id, problem.A, problem.B, u_current, rule);
        std::array<double, 3> ue{0.0, 0.0, 0.0};
        if (!u_current.empty())
            for (int k = 0; k < 3; ++k)
                ue[static_cast<size_t>(k)] =
                    u_current[static_cast<size_t>(e.node_ids[static_cast<size_t>(k)])];
        auto p = mesh.element_coords(e.id);
        auto load = [&](double x, double y) {
            double fval = problem.f ? problem.f(x, y) : 0.0;
            if (problem.C) {
                // Barycentric coordinates of (x,y) to evaluate the iterate.
                const double det = mesh.element_signed_area2(e.id);
                const double l1 = ((p[1].x - x) * (p[2].y - y) - (p[2].x - x) * (p[1].y - y)) / det;
                const double l2 = ((p[2].x - x) * (p[0].y - y) - (p[0].x - x) * (p[2].y - y)) / det;
                const double l3 = 1.0 - l1 - l2;
                const double uq = l1 * ue[0] + l2 * ue[1] + l3 * ue[2];
                fval -= problem.C(x, y, uq);
            }
            return fval;
        };
        const auto fe = element_force(mesh, e.id, load, rule);
        for (int i = 0; i < 3; ++i) {
            sys.F[static_cast<size_t>(e.node_ids[static_cast<size_t>(i)])] += fe[static_cast<size_t>(i)];
            for (int j = 0; j < 3; ++j)
                trip.push_back({e.node_ids[static_cast<size_t>(i)], e.node_ids[static_cast<size_t>(j)],
                                ke[static_cast<size_t>(i)][static_cast<size_t>(j)]});
        }
    }
    for (int i = 0; i < n; ++i) trip.push_back({i, i, 0.0});
    sys.K = SparseMatrix::from_triplets(n, n, std::move(trip));

    for (const BoundaryEdge& edge : mesh.boundary_edges) {
        auto it = problem.bcs.find(edge.marker);
        if (it != problem.bcs.end() && it->second.kind == BcKind::neumann)
            apply_neumann(sys, mesh, edge, it->second.value, segment_rule(3));
    }

    std::map<int, double> constraints = extra_dirichlet;
    for (const auto& [marker, bc] : problem.bcs) {
        if (bc.kind != BcKind::dirichlet) continue;
        for (int node : nodes_on_marker(mesh, marker)) {
            const Node& nd = mesh.nodes[static_cast<size_t>(node)];
            const double v = bc.value(nd.x, nd.y);
            auto found = constraints.find(node);
            if (found == constraints.end()) constraints[node] = v;
            // Corner nodes shared by two Dirichlet segments keep the value
            // seen first unless the fields genuinely disagree.
            else if (std::abs(found->second - v) > 1e-10 * (1.0 + std::abs(v)))
                throw Error(ErrorKind::conflict,
                            "conflicting Dirichlet data at node " + std::to_string(node));
        }
    }
    apply_dirichlet(sys, constraints);
    return sys;
}

/// Nodes collocated by a nonlinear boundary condition: nodes of nonlinear
/// segments except those already pinned by a Dirichlet segment.
inline std::set<int> nonlinear_bc_nodes(const Mesh& mesh, const ProblemSpec& problem) {
    std::set<int> dirichlet;
    for (const auto& [marker, bc] : problem.bcs)
        if (bc.kind == BcKind::dirichlet)
            for (int node : nodes_on_marker(mesh, marker)) dirichlet.insert(node);
    std::set<int> out;
    for (const auto& [marker, bc] : problem.bcs)
        if (bc.kind == BcKind::nonlinear)
            for (int node : nodes_on_marker(mesh, marker))
                if (!dirichlet.count(node)) out.insert(node);
    return out;
}

} // namespace hdrm
