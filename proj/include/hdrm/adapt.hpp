#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hdrm/config.hpp"
#include "hdrm/mesh.hpp"
#include "hdrm/newton.hpp"
#include "hdrm/problem.hpp"
#include "hdrm/quadrature.hpp"

namespace hdrm {

/// Per-element refinement indicator eta_K = |grad u_h| (constant on P1).
struct IndicatorField {
    Vector values; // one entry per element
};

namespace detail {
/// Degree-4 rule composited over the four midpoint children of the
/// reference triangle.
inline const QuadratureRule& composite_triangle_rule() {
    static const QuadratureRule rule = [] {
        const QuadratureRule& base = triangle_rule(4);
        const Vec2 A{0, 0}, Bv{1, 0}, C{0, 1}, mAB{0.5, 0}, mBC{0.5, 0.5}, mCA{0, 0.5};
        const std::array<std::array<Vec2, 3>, 4> children = {
            {{A, mAB, mCA}, {mAB, Bv, mBC}, {mCA, mBC, C}, {mAB, mBC, mCA}}};
        QuadratureRule out;
        out.degree = base.degree;
        for (const auto& ch : children)
            for (size_t q = 0; q < base.points.size(); ++q) {
                const double xi = base.points[q].x, eta = base.points[q].y;
                out.points.push_back({ch[0].x + (ch[1].x - ch[0].x) * xi + (ch[2].x - ch[0].x) * eta,
                                      ch[0].y + (ch[1].y - ch[0].y) * xi + (ch[2].y - ch[0].y) * eta});
                out.weights.push_back(base.weights[q] / 4.0);
            }
        return out;
    }();
    return rule;
}
} // namespace detail

/// L2(Omega) discrepancy between the P1 field and an exact solution,
/// integrated element by element with a composite degree-4 rule.
inline double error_function(const Vector& u_h, const ScalarField& exact, const Mesh& mesh) {
    if (!exact) throw Error(ErrorKind::config, "error_function: exact solution required");
    if (u_h.size() != mesh.nodes.size())
        throw Error(ErrorKind::dimension_mismatch, "error_function: field size mismatch");
    const QuadratureRule& rule = detail::composite_triangle_rule();
    double total = 0.0;
    for (const Element& e : mesh.elements) {
        auto p = mesh.element_coords(e.id);
        const double u0 = u_h[static_cast<size_t>(e.node_ids[0])];
        const double u1 = u_h[static_cast<size_t>(e.node_ids[1])];
        const double u2 = u_h[static_cast<size_t>(e.node_ids[2])];
        total += integrate_on_element(rule, mesh, e.id, [&](double x, double y) {
            const double det = mesh.element_signed_area2(e.id);
            const double l0 = ((p[1].x - x) * (p[2].y - y) - (p[2].x - x) * (p[1].y - y)) / det;
            const double l1 = ((p[2].x - x) * (p[0].y - y) - (p[0].x - x) * (p[2].y - y)) / det;
            const double uh = l0 * u0 + l1 * u1 + (1.0 - l0 - l1) * u2;
            const double d = exact(x, y) - uh;
            return d * d;
        });
    }
    return std::sqrt(total);
}

inline IndicatorField compute_indicators(const Vector& u_h, const Mesh& mesh) {
    IndicatorField ind;
    ind.values.reserve(mesh.elements.size());
    for (const Element& e : mesh.elements) {
        const Vec2 g = element_gradient(mesh, u_h, e.id);
        ind.values.push_back(g.norm());
    }
    return ind;
}

/// Marking rule: |grad u_h| > epsilon in absolute mode, or the top
/// marking_fraction of elements by indicator when the fraction is set.
inline std::set<int> mark(const IndicatorField& indicators, const RefinementConfig& config) {
    config.validate();
    std::set<int> marked;
    const int n = static_cast<int>(indicators.values.size());
    if (config.marking_fraction > 0.0) {
        std::vector<int> order;
        for (int k = 0; k < n; ++k)
            if (indicators.values[static_cast<size_t>(k)] > 0.0) order.push_back(k);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ea = indicators.values[static_cast<size_t>(a)];
            const double eb = indicators.values[static_cast<size_t>(b)];
            return ea != eb ? ea > eb : a < b;
        });
        const size_t count = std::min(
            order.size(),
            static_cast<size_t>(std::ceil(config.marking_fraction * n)));
        for (size_t k = 0; k < count; ++k) marked.insert(order[k]);
        return marked;
    }
    for (int k = 0; k < n; ++k)
        if (indicators.values[static_cast<size_t>(k)] > config.epsilon) marked.insert(k);
    return marked;
}

/// Transfers nodal values onto a refined mesh: retained nodes keep their
/// values, new nodes evaluate the old P1 interpolant.
inline Vector interpolate_to_new_mesh(const Vector& u_h, const Mesh& old_mesh,
                                      const Mesh& new_mesh) {
    if (u_h.size() != old_mesh.nodes.size())
        throw Error(ErrorKind::dimension_mismatch, "interpolate: field size mismatch");
    Vector out(new_mesh.nodes.size(), 0.0);
    for (const Node& n : new_mesh.nodes) {
        if (n.id < old_mesh.node_count()) {
            const Node& o = old_mesh.nodes[static_cast<size_t>(n.id)];
            if (o.x == n.x && o.y == n.y) {
                out[static_cast<size_t>(n.id)] = u_h[static_cast<size_t>(n.id)];
                continue;
            }
        }
        bool found = false;
        for (const Element& e : old_mesh.elements) {
            auto p = old_mesh.element_coords(e.id);
            const double det = old_mesh.element_signed_area2(e.id);
            const double l0 =
                ((p[1].x - n.x) * (p[2].y - n.y) - (p[2].x - n.x) * (p[1].y - n.y)) / det;
            const double l1 =
                ((p[2].x - n.x) * (p[0].y - n.y) - (p[0].x - n.x) * (p[2].y - n.y)) / det;
            const double l2 = 1.0 - l0 - l1;
            const double tol = -1e-10;
            if (l0 >= tol && l1 >= tol && l2 >= tol) {
                out[static_cast<size_t>(n.id)] =
                    l0 * u_h[static_cast<size_t>(e.node_ids[0])] +
                    l1 * u_h[static_cast<size_t>(e.node_ids[1])] +
                    l2 * u_h[static_cast<size_t>(e.node_ids[2])];
                found = true;
                break;
            }
        }
        if (!found)
            throw Error(ErrorKind::geometry,
                        "interpolate: node " + std::to_string(n.id) + " outside the old mesh");
    }
    return out;
}

struct AdaptiveGenerationRow {
    int generation = 0;
    int elements = 0;
    int nodes = 0;
    int marked = 0;
    double l2_error = 0.0;
    bool has_error = false; // verification mode only
    int newton_iters = 0;
};

struct AdaptiveResult {
    Vector u;
    Mesh mesh;
    std::vector<AdaptiveGenerationRow> report;
    bool newton_converged = false;
    std::string stop_reason; // error_tolerance | no_marks | max_generations
};

/// `generation, elements, nodes, marked, L2_error(or NA), newton_iters`,
/// preceded by a comment naming the mode that produced the error column.
inline void write_adapt_report_csv(const AdaptiveResult& result, std::ostream& os) {
    const bool verification = !result.report.empty() && result.report.front().has_error;
    os << "# mode: " << (verification ? "verification" : "production") << "\n";
    os << "generation,elements,nodes,marked,L2_error,newton_iters\n";
    char buf[160];
    for (const AdaptiveGenerationRow& r : result.report) {
        if (r.has_error)
            std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.12g,%d\n", r.generation, r.elements,
                          r.nodes, r.marked, r.l2_error, r.newton_iters);
        else
            std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,NA,%d\n", r.generation, r.elements,
                          r.nodes, r.marked, r.newton_iters);
        os << buf;
    }
}

/// Outer adaptive loop: solve, estimate, mark, refine, warm-start from the
/// interpolated iterate. In verification mode (an exact solution is
/// available) the loop also stops once the L2 error drops below delta; in
/// production mode the gradient indicator alone drives marking and the
/// loop stops when nothing is marked or the generation budget runs out.
inline AdaptiveResult adaptive_solve(const ProblemSpec& problem, const Mesh& initial_mesh,
                                     const NewtonConfig& newton_config,
                                     const RefinementConfig& refine_config) {
    refine_config.validate();
    AdaptiveResult result;
    result.mesh = initial_mesh;
    Vector warm;
    for (int gen = 0;; ++gen) {
        NewtonResult solve = newton_krylov_solve(warm, problem, result.mesh, newton_config);
        result.u = solve.u;
        result.newton_converged = solve.converged;

        AdaptiveGenerationRow row;
        row.generation = gen;
        row.elements = result.mesh.element_count();
        row.nodes = result.mesh.node_count();
        row.newton_iters = solve.iterations();
        if (problem.has_exact()) {
            row.l2_error = error_function(result.u, problem.exact, result.mesh);
            row.has_error = true;
        }
        const IndicatorField ind = compute_indicators(result.u, result.mesh);
        const std::set<int> marked = mark(ind, refine_config);
        row.marked = static_cast<int>(marked.size());
        result.report.push_back(row);

        if (row.has_error && row.l2_error < refine_config.delta) {
            result.stop_reason = "error_tolerance";
            return result;
        }
        if (marked.empty()) {
            result.stop_reason = "no_marks";
            return result;
        }
        if (gen >= refine_config.max_generations) {
            result.stop_reason = "max_generations";
            return result;
        }
        Mesh refined = refine_elements(result.mesh, marked);
        warm = interpolate_to_new_mesh(result.u, result.mesh, refined);
        result.mesh = std::move(refined);
    }
}

} // namespace hdrm
