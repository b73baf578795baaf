#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hdrm/errors.hpp"
#include "hdrm/mesh.hpp"

namespace hdrm {

/// Quadrature rule on a reference domain: the unit triangle
/// (0,0)-(1,0)-(0,1) or the segment [-1,1]. `degree` is the highest total
/// polynomial degree integrated exactly.
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int degree = 0;
};

/// Triangle rules of degree 1, 2 and 4 (1, 3 and 6 points).
inline const QuadratureRule& triangle_rule(int degree) {
    static const QuadratureRule deg1{{{1.0 / 3.0, 1.0 / 3.0}}, {0.5}, 1};
    static const QuadratureRule deg2{
        {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}},
        {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0},
        2};
    // Dunavant 6-point rule, degree 4.
    static const double a = 0.445948490915965;
    static const double b = 0.091576213509771;
    static const double wa = 0.223381589678011 / 2.0;
    static const double wb = 0.109951743655322 / 2.0;
    static const QuadratureRule deg4{
        {{a, a}, {1.0 - 2.0 * a, a}, {a, 1.0 - 2.0 * a},
         {b, b}, {1.0 - 2.0 * b, b}, {b, 1.0 - 2.0 * b}},
        {wa, wa, wa, wb, wb, wb},
        4};
    switch (degree) {
        case 1: return deg1;
        case 2: return deg2;
        case 4: return deg4;
        default:
            throw Error(ErrorKind::config,
                        "triangle_rule: no rule of degree " + std::to_string(degree));
    }
}

/// Gauss-Legendre rules on [-1,1] with 1..4 points (degrees 1,3,5,7).
inline const QuadratureRule& segment_rule(int npoints) {
    static const QuadratureRule g1{{{0.0, 0.0}}, {2.0}, 1};
    static const double c2 = 0.5773502691896257;
    static const QuadratureRule g2{{{-c2, 0.0}, {c2, 0.0}}, {1.0, 1.0}, 3};
    static const double c3 = 0.7745966692414834;
    static const QuadratureRule g3{{{-c3, 0.0}, {0.0, 0.0}, {c3, 0.0}},
                                   {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0},
                                   5};
    static const double c4a = 0.3399810435848563, c4b = 0.8611363115940526;
    static const double w4a = 0.6521451548625461, w4b = 0.3478548451374538;
    static const QuadratureRule g4{{{-c4b, 0.0}, {-c4a, 0.0}, {c4a, 0.0}, {c4b, 0.0}},
                                   {w4b, w4a, w4a, w4b},
                                   7};
    switch (npoints) {
        case 1: return g1;
        case 2: return g2;
        case 3: return g3;
        case 4: return g4;
        default:
            throw Error(ErrorKind::config,
                        "segment_rule: no rule with " + std::to_string(npoints) + " points");
    }
}

namespace detail {
inline void check_finite(double v, double x, double y) {
    if (!std::isfinite(v))
        throw Error(ErrorKind::numeric,
                    "non-finite integrand value at (" + std::to_string(x) + ", " +
                        std::to_string(y) + ")");
}
} // namespace detail

/// Integrates `f(x, y)` over a physical element: sum of w_j f(x_j) |J| with
/// the affine map from the reference triangle.
template <class F>
double integrate_on_element(const QuadratureRule& rule, const Mesh& mesh, int element_id,
                            F&& f) {
    auto p = mesh.element_coords(element_id);
    const double jac = mesh.element_signed_area2(element_id); // |J| of the affine map
    double sum = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q) {
        const double xi = rule.points[q].x, eta = rule.points[q].y;
        const double x = p[0].x + (p[1].x - p[0].x) * xi + (p[2].x - p[0].x) * eta;
        const double y = p[0].y + (p[1].y - p[0].y) * xi + (p[2].y - p[0].y) * eta;
        const double v = f(x, y);
        detail::check_finite(v, x, y);
        sum += rule.weights[q] * v * jac;
    }
    return sum;
}

/// Integrates `f(x, y)` along a boundary edge; |J| = length / 2.
template <class F>
double integrate_on_edge(const QuadratureRule& rule, const Mesh& mesh,
                         const BoundaryEdge& edge, F&& f) {
    const Node& a = mesh.nodes[static_cast<size_t>(edge.node_ids[0])];
    const Node& b = mesh.nodes[static_cast<size_t>(edge.node_ids[1])];
    const double jac = 0.5 * std::hypot(b.x - a.x, b.y - a.y);
    double sum = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q) {
        const double t = 0.5 * (1.0 + rule.points[q].x); // in [0,1]
        const double x = a.x + (b.x - a.x) * t;
        const double y = a.y + (b.y - a.y) * t;
        const double v = f(x, y);
        detail::check_finite(v, x, y);
        sum += rule.weights[q] * v * jac;
    }
    return sum;
}

} // namespace hdrm
