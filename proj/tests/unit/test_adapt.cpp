#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "hdrm/adapt.hpp"

using namespace hdrm;

namespace {

ProblemSpec dirichlet_problem(const FieldDef& f_def, const FieldDef& exact_def) {
    ProblemSpec p;
    p.f_def = f_def;
    p.exact_def = exact_def;
    for (int m = 0; m < 4; ++m) p.bc_defs[m] = {"dirichlet", 1.0, {"exact", {}}};
    p.finalize();
    return p;
}

Vector nodal_interpolant(const ScalarField& f, const Mesh& mesh) {
    Vector u(mesh.nodes.size());
    for (const Node& n : mesh.nodes) u[static_cast<size_t>(n.id)] = f(n.x, n.y);
    return u;
}

// Independent fine-quadrature oracle: degree-4 rule on the four red
// children of every element.
double fine_error_oracle(const Vector& u_h, const ScalarField& exact, const Mesh& mesh) {
    std::set<int> all;
    for (const Element& e : mesh.elements) all.insert(e.id);
    Mesh fine = refine_elements(mesh, all);
    Vector uf = interpolate_to_new_mesh(u_h, mesh, fine);
    return error_function(uf, exact, fine);
}

} // namespace

TEST_CASE("error function is exact on reproduced linear fields", "[adapt]") {
    Mesh mesh = build_rect_mesh(4, 4, {0, 0, 1, 1});
    auto lin = [](double x, double y) { return 1.0 + 2.0 * x - 0.5 * y; };
    CHECK(error_function(nodal_interpolant(lin, mesh), lin, mesh) < 1e-12);
}

TEST_CASE("error against the zero field returns the L2 norm", "[adapt]") {
    Mesh mesh = build_rect_mesh(5, 3, {0, 0, 1, 1});
    Vector u = nodal_interpolant([](double x, double y) { return x * y + 0.5; }, mesh);
    const double err = error_function(u, [](double, double) { return 0.0; }, mesh);
    CHECK_THAT(err, Catch::Matchers::WithinRel(l2_norm(u, mesh), 1e-10));
}

TEST_CASE("interpolation error of sin sin matches a fine-quadrature oracle", "[adapt]") {
    Mesh mesh = build_rect_mesh(8, 8, {0, 0, 1, 1});
    const double pi = 3.14159265358979323846;
    auto ss = [pi](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
    Vector u = nodal_interpolant(ss, mesh);
    const double err = error_function(u, ss, mesh);
    const double oracle = fine_error_oracle(u, ss, mesh);
    CHECK_THAT(err, Catch::Matchers::WithinAbs(oracle, 1e-6));
}

TEST_CASE("indicators are the element gradient magnitudes", "[adapt]") {
    Mesh mesh = build_rect_mesh(8, 8, {0, 0, 1, 1});
    IndicatorField c = compute_indicators(Vector(mesh.nodes.size(), 3.0), mesh);
    for (double v : c.values) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.0, 1e-13));

    IndicatorField gx = compute_indicators(nodal_interpolant([](double x, double) { return x; }, mesh), mesh);
    for (double v : gx.values) CHECK_THAT(v, Catch::Matchers::WithinRel(1.0, 1e-12));

    // Analytic gradient oracle: for u = x^2 the indicator tracks 2x at the
    // centroid to O(h).
    Vector ux2 = nodal_interpolant([](double x, double) { return x * x; }, mesh);
    IndicatorField ind = compute_indicators(ux2, mesh);
    const double h = 1.0 / 8.0;
    double best = -1.0;
    int best_elem = -1;
    for (const Element& e : mesh.elements) {
        auto p = mesh.element_coords(e.id);
        const double cx = (p[0].x + p[1].x + p[2].x) / 3.0;
        CHECK_THAT(ind.values[static_cast<size_t>(e.id)],
                   Catch::Matchers::WithinAbs(2.0 * cx, 2.0 * h));
        if (ind.values[static_cast<size_t>(e.id)] > best) {
            best = ind.values[static_cast<size_t>(e.id)];
            best_elem = e.id;
        }
    }
    auto pb = mesh.element_coords(best_elem);
    CHECK((pb[0].x + pb[1].x + pb[2].x) / 3.0 > 0.9); // eta grows toward x = 1
}

TEST_CASE("absolute marking compares indicators against epsilon", "[adapt]") {
    RefinementConfig cfg;
    cfg.epsilon = 1.5;
    IndicatorField ind{{1.0, 2.0, 3.0}};
    CHECK(mark(ind, cfg) == std::set<int>{1, 2});

    cfg.epsilon = 10.0;
    CHECK(mark(ind, cfg).empty());

    cfg.epsilon = 1e-300;
    IndicatorField mixed{{0.0, 0.5, 0.0, 0.25}};
    CHECK(mark(mixed, cfg) == std::set<int>{1, 3});
}

TEST_CASE("fraction marking takes the largest indicators", "[adapt]") {
    RefinementConfig cfg;
    cfg.marking_fraction = 0.5;
    IndicatorField ind{{0.1, 0.9, 0.5, 0.7}};
    CHECK(mark(ind, cfg) == std::set<int>{1, 3});

    IndicatorField zeros{{0.0, 0.0}};
    CHECK(mark(zeros, cfg).empty());

    // At least one element whenever any indicator is positive.
    cfg.marking_fraction = 0.01;
    IndicatorField one{{0.0, 0.0, 1e-8}};
    CHECK(mark(one, cfg) == std::set<int>{2});
}

TEST_CASE("interpolation is the identity on the same mesh", "[adapt]") {
    Mesh mesh = build_rect_mesh(3, 3, {0, 0, 1, 1});
    Vector u = nodal_interpolant([](double x, double y) { return std::cos(x + 2 * y); }, mesh);
    Vector v = interpolate_to_new_mesh(u, mesh, mesh);
    CHECK(v == u);
}

TEST_CASE("interpolation reproduces linear fields across refinement", "[adapt]") {
    Mesh mesh = build_rect_mesh(2, 2, {0, 0, 1, 1});
    auto lin = [](double x, double y) { return 2.0 * x + 1.0 - 3.0 * y; };
    Vector u = nodal_interpolant(lin, mesh);
    Mesh fine = refine_elements(mesh, {0, 1, 5});
    Vector v = interpolate_to_new_mesh(u, mesh, fine);
    for (const Node& n : fine.nodes)
        CHECK_THAT(v[static_cast<size_t>(n.id)], Catch::Matchers::WithinAbs(lin(n.x, n.y), 1e-13));

    // Old nodes keep their values bit-exactly.
    for (int id = 0; id < mesh.node_count(); ++id)
        CHECK(v[static_cast<size_t>(id)] == u[static_cast<size_t>(id)]);
}

TEST_CASE("midpoint nodes average their parent edge values", "[adapt]") {
    Mesh mesh = build_rect_mesh(1, 1, {0, 0, 1, 1});
    Vector u = {1.0, 5.0, 2.0, 8.0};
    Mesh fine = refine_elements(mesh, {0, 1});
    Vector v = interpolate_to_new_mesh(u, mesh, fine);
    for (int id = mesh.node_count(); id < fine.node_count(); ++id) {
        const Node& n = fine.nodes[static_cast<size_t>(id)];
        // Find the parent edge by matching the midpoint coordinates.
        bool matched = false;
        for (int a = 0; a < mesh.node_count() && !matched; ++a)
            for (int b = a + 1; b < mesh.node_count() && !matched; ++b) {
                const Node& na = mesh.nodes[static_cast<size_t>(a)];
                const Node& nb = mesh.nodes[static_cast<size_t>(b)];
                if (std::abs(0.5 * (na.x + nb.x) - n.x) < 1e-14 &&
                    std::abs(0.5 * (na.y + nb.y) - n.y) < 1e-14) {
                    CHECK_THAT(v[static_cast<size_t>(id)],
                               Catch::Matchers::WithinAbs(
                                   0.5 * (u[static_cast<size_t>(a)] + u[static_cast<size_t>(b)]),
                                   1e-13));
                    matched = true;
                }
            }
        CHECK(matched);
    }
}

TEST_CASE("nodes outside the old mesh raise a geometry error", "[adapt]") {
    Mesh small = build_rect_mesh(2, 2, {0, 0, 1, 1});
    Mesh big = build_rect_mesh(2, 2, {0, 0, 2, 1});
    Vector u(small.nodes.size(), 1.0);
    CHECK_THROWS_MATCHES(interpolate_to_new_mesh(u, small, big), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::geometry;
                         }));
}

TEST_CASE("linear exact solutions stop at generation zero", "[adapt]") {
    ProblemSpec p = dirichlet_problem({"zero", {}}, {"linear", {0, 1, 0}});
    Mesh mesh = build_rect_mesh(4, 4, {0, 0, 1, 1});
    RefinementConfig cfg;
    cfg.epsilon = 2.0; // |grad u| = 1 everywhere stays below the threshold
    cfg.max_generations = 5;
    AdaptiveResult res = adaptive_solve(p, mesh, NewtonConfig{}, cfg);
    REQUIRE(res.report.size() == 1);
    CHECK(res.report.front().marked == 0);
    // Either stop applies: an exact solve can hit the error tolerance first.
    CHECK((res.stop_reason == "no_marks" || res.stop_reason == "error_tolerance"));
    CHECK(res.mesh.element_count() == mesh.element_count());
}

TEST_CASE("manufactured problem keeps the error non-increasing", "[adapt]") {
    ProblemSpec p = dirichlet_problem({"sin_sin_source", {}}, {"sin_sin", {}});
    Mesh mesh = build_rect_mesh(6, 6, {0, 0, 1, 1});
    RefinementConfig cfg;
    cfg.marking_fraction = 0.4;
    cfg.max_generations = 2;
    cfg.delta = 1e-12;
    AdaptiveResult res = adaptive_solve(p, mesh, NewtonConfig{}, cfg);
    REQUIRE(res.report.size() == 3);
    for (size_t k = 1; k < res.report.size(); ++k) {
        REQUIRE(res.report[k].has_error);
        CHECK(res.report[k].l2_error <= res.report[k - 1].l2_error);
    }
    CHECK(res.stop_reason == "max_generations");
    // Fraction marking refines at least one element per generation.
    for (size_t k = 0; k + 1 < res.report.size(); ++k) CHECK(res.report[k].marked >= 1);
}

TEST_CASE("zero generations reduce to a single newton solve", "[adapt]") {
    ProblemSpec p = dirichlet_problem({"sin_sin_source", {}}, {"sin_sin", {}});
    Mesh mesh = build_rect_mesh(5, 5, {0, 0, 1, 1});
    RefinementConfig cfg;
    cfg.max_generations = 0;
    cfg.epsilon = 1e-6;
    AdaptiveResult res = adaptive_solve(p, mesh, NewtonConfig{}, cfg);
    NewtonResult direct = newton_krylov_solve({}, p, mesh, NewtonConfig{});
    REQUIRE(res.report.size() == 1);
    CHECK(res.u == direct.u);
    CHECK(res.mesh.element_count() == mesh.element_count());
}

TEST_CASE("adapt report exports csv with the mode label", "[adapt]") {
    ProblemSpec p = dirichlet_problem({"zero", {}}, {"linear", {0, 1, 0}});
    Mesh mesh = build_rect_mesh(2, 2, {0, 0, 1, 1});
    RefinementConfig cfg;
    cfg.epsilon = 2.0;
    AdaptiveResult res = adaptive_solve(p, mesh, NewtonConfig{}, cfg);
    std::ostringstream os;
    write_adapt_report_csv(res, os);
    const std::string csv = os.str();
    CHECK(csv.rfind("# mode: verification\n", 0) == 0);
    CHECK(csv.find("generation,elements,nodes,marked,L2_error,newton_iters\n") != std::string::npos);
}
