#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hdrm/quadrature.hpp"

using namespace hdrm;

namespace {

// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
double reference_monomial_integral(int a, int b) {
    auto fact = [](int n) {
        double f = 1.0;
        for (int k = 2; k <= n; ++k) f *= k;
        return f;
    };
    return fact(a) * fact(b) / fact(a + b + 2);
}

Mesh reference_triangle_mesh() {
    Mesh m;
    m.nodes = {{0, 0, 0}, {1, 1, 0}, {2, 0, 1}};
    m.elements = {{0, {0, 1, 2}, 0, -1}};
    m.boundary_edges = {{{0, 1}, 0, 0}, {{1, 2}, 0, 1}, {{2, 0}, 0, 2}};
    return m;
}

} // namespace

TEST_CASE("triangle rules integrate declared degrees exactly", "[quadrature]") {
    Mesh ref = reference_triangle_mesh();
    for (int degree : {1, 2, 4}) {
        const QuadratureRule& rule = triangle_rule(degree);
        double wsum = 0.0;
        for (double w : rule.weights) {
            CHECK(w > 0.0);
            wsum += w;
        }
        CHECK_THAT(wsum, Catch::Matchers::WithinRel(0.5, 1e-14));
        for (int a = 0; a <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b) {
                const double got = integrate_on_element(
                    rule, ref, 0, [&](double x, double y) { return std::pow(x, a) * std::pow(y, b); });
                CHECK_THAT(got, Catch::Matchers::WithinRel(reference_monomial_integral(a, b), 1e-13));
            }
    }
}

TEST_CASE("segment rules integrate declared degrees exactly", "[quadrature]") {
    for (int n = 1; n <= 4; ++n) {
        const QuadratureRule& rule = segment_rule(n);
        double wsum = 0.0;
        for (double w : rule.weights) {
            CHECK(w > 0.0);
            wsum += w;
        }
        CHECK_THAT(wsum, Catch::Matchers::WithinRel(2.0, 1e-14));
        for (int k = 0; k <= rule.degree; ++k) {
            double got = 0.0;
            for (size_t q = 0; q < rule.points.size(); ++q)
                got += rule.weights[q] * std::pow(rule.points[q].x, k);
            const double expected = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
            CHECK_THAT(got, Catch::Matchers::WithinAbs(expected, 1e-13));
        }
    }
}

TEST_CASE("unit integrand recovers element area", "[quadrature]") {
    Mesh m = build_rect_mesh(3, 2, {0.5, -1, 2.5, 3});
    for (const Element& e : m.elements) {
        const double got = integrate_on_element(triangle_rule(2), m, e.id,
                                                [](double, double) { return 1.0; });
        CHECK_THAT(got, Catch::Matchers::WithinRel(m.element_area(e.id), 1e-13));
    }
}

TEST_CASE("reference-triangle integrals match closed forms", "[quadrature]") {
    Mesh ref = reference_triangle_mesh();
    CHECK_THAT(integrate_on_element(triangle_rule(2), ref, 0, [](double x, double) { return x; }),
               Catch::Matchers::WithinRel(1.0 / 6.0, 1e-13));
    // Symbolic integration oracle: int_T x^2 y dx dy = 1/60.
    CHECK_THAT(integrate_on_element(triangle_rule(4), ref, 0,
                                    [](double x, double y) { return x * x * y; }),
               Catch::Matchers::WithinRel(1.0 / 60.0, 1e-13));
}

TEST_CASE("edge integrals match closed forms", "[quadrature]") {
    Mesh m = build_rect_mesh(1, 1, {0, 0, 2, 2});
    const BoundaryEdge& bottom = m.boundary_edges[0]; // (0,0) -> (2,0), length 2
    CHECK_THAT(integrate_on_edge(segment_rule(2), m, bottom, [](double, double) { return 1.0; }),
               Catch::Matchers::WithinRel(2.0, 1e-13));
    // Arc length s equals x on this edge: int_0^2 s^2 ds = 8/3.
    CHECK_THAT(integrate_on_edge(segment_rule(2), m, bottom, [](double x, double) { return x * x; }),
               Catch::Matchers::WithinRel(8.0 / 3.0, 1e-13));

    Mesh unit = build_rect_mesh(1, 1, {0, 0, 1, 1});
    CHECK_THAT(integrate_on_edge(segment_rule(2), unit, unit.boundary_edges[0],
                                 [](double x, double) { return x; }),
               Catch::Matchers::WithinRel(0.5, 1e-13));
}

TEST_CASE("integration is affine invariant", "[quadrature]") {
    std::mt19937 rng(7u);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    Mesh ref = reference_triangle_mesh();
    for (int trial = 0; trial < 10; ++trial) {
        // Random non-degenerate physical triangle.
        Mesh phys;
        for (;;) {
            phys.nodes = {{0, coef(rng), coef(rng)}, {1, coef(rng), coef(rng)}, {2, coef(rng), coef(rng)}};
            phys.elements = {{0, {0, 1, 2}, 0, -1}};
            double det = (phys.nodes[1].x - phys.nodes[0].x) * (phys.nodes[2].y - phys.nodes[0].y) -
                         (phys.nodes[2].x - phys.nodes[0].x) * (phys.nodes[1].y - phys.nodes[0].y);
            if (det > 0.1) break;
        }
        const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
        auto f = [&](double x, double y) { return c0 + c1 * x * y + c2 * y * y; };
        auto map = [&](double xi, double eta) {
            const auto& n = phys.nodes;
            return Vec2{n[0].x + (n[1].x - n[0].x) * xi + (n[2].x - n[0].x) * eta,
                        n[0].y + (n[1].y - n[0].y) * xi + (n[2].y - n[0].y) * eta};
        };
        // |J| of T relative to the reference element, whose own jacobian is 1.
        const double jac = phys.element_signed_area2(0);
        const double lhs = jac * integrate_on_element(triangle_rule(4), ref, 0,
                                                      [&](double xi, double eta) {
                                                          Vec2 p = map(xi, eta);
                                                          return f(p.x, p.y);
                                                      });
        const double rhs = integrate_on_element(triangle_rule(4), phys, 0, f);
        CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-12));
    }
}

TEST_CASE("non-finite integrands are reported with the offending point", "[quadrature]") {
    Mesh m = build_rect_mesh(1, 1, {0, 0, 1, 1});
    CHECK_THROWS_MATCHES(
        integrate_on_element(triangle_rule(1), m, 0,
                             [](double, double) { return std::numeric_limits<double>::infinity(); }),
        Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
            return e.kind() == ErrorKind::numeric;
        }));
}
