// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Run with no arguments for all criteria, or --criterion N for one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hdrm/hdrm.hpp"

#ifndef HDRM_BENCH_DIR
#define HDRM_BENCH_DIR "benchmarks"
#endif

namespace {

using namespace hdrm;

std::string g_cli_path;
std::string g_bench_dir = HDRM_BENCH_DIR;

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ProblemSpec load_benchmark() {
    const std::string path = g_bench_dir + "/heat_radiation.prob";
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::io, "cannot open " + path);
    return parse_problem(is);
}

ProblemSpec sin_sin_problem() {
    ProblemSpec p;
    p.f_def = {"sin_sin_source", {}};
    p.exact_def = {"sin_sin", {}};
    for (int m = 0; m < 4; ++m) p.bc_defs[m] = {"dirichlet", 1.0, {"exact", {}}};
    p.finalize();
    return p;
}

// --- criterion 1 -----------------------------------------------------------
// Table arithmetic from the reported per-method errors, plus the qualitative
// ordering on the shipped desk-scale benchmark. The reported absolute error
// magnitudes themselves are not reproducible (no problem instance is given)
// and are not asserted.
Check criterion1() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<double> table1 = {0.0001, 0.001, 0.0005, 0.0003};
    const auto d = delta_table(table1);
    c.require(std::abs(d[0][1] - 0.0009) < 1e-12, "delta(hdrm, gauss_seidel) != 0.0009");
    c.require(std::abs(d[0][2] - 0.0004) < 1e-12, "delta(hdrm, dynamic_relaxation) != 0.0004");
    c.require(std::abs(d[0][3] - 0.0002) < 1e-12, "delta(hdrm, dual_reciprocity) != 0.0002");
    c.require(std::abs(d[2][1] - 0.0005) < 1e-12, "delta(dynamic_relaxation, gauss_seidel) != 0.0005");
    c.require(std::abs(d[3][1] - 0.0007) < 1e-12, "delta(dual_reciprocity, gauss_seidel) != 0.0007");
    c.require(std::abs(d[3][2] - 0.0002) < 1e-12,
              "delta(dual_reciprocity, dynamic_relaxation) != 0.0002");

    ProblemSpec spec = load_benchmark();
    c.require(spec.bench.gauss_seidel_max_iter <= 100000 &&
                  spec.bench.dynamic_relaxation_max_iter <= 100000,
              "iteration budgets exceed 1e5");
    const int nodes = (spec.bench.hdrm_nx + 1) * (spec.bench.hdrm_nx + 1);
    c.require(nodes >= 500 && nodes <= 2000, "benchmark is not desk scale (~1e3 unknowns)");

    BenchmarkReport report = compare_methods(spec);
    double e_hdrm = 0, e_dual = 0, e_dyn = 0, e_gs = 0;
    for (const SolverReport& r : report.methods) {
        if (r.method == "hdrm") e_hdrm = r.final_error;
        if (r.method == "dual_reciprocity") e_dual = r.final_error;
        if (r.method == "dynamic_relaxation") e_dyn = r.final_error;
        if (r.method == "gauss_seidel") e_gs = r.final_error;
        c.require(r.converged, r.method + " did not converge");
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "errors: hdrm %.3e < dual_reciprocity %.3e < dynamic_relaxation %.3e "
                  "< gauss_seidel %.3e",
                  e_hdrm, e_dual, e_dyn, e_gs);
    c.require(e_hdrm < e_dual, std::string("ordering violated: ") + buf);
    c.require(e_dual < e_dyn, std::string("ordering violated: ") + buf);
    c.require(e_dyn < e_gs, std::string("ordering violated: ") + buf);
    const double wall = elapsed_since(t0);
    c.require(wall < 60.0, "benchmark exceeded 60 s");
    if (c.ok) c.detail = std::string(buf) + ", " + std::to_string(wall) + " s";
    return c;
}

// --- criterion 2 -----------------------------------------------------------
Check criterion2() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    ProblemSpec p = sin_sin_problem();
    std::vector<double> errors;
    for (int n : {8, 16, 32}) {
        Mesh mesh = build_rect_mesh(n, n, {0, 0, 1, 1});
        NewtonResult r = newton_krylov_solve({}, p, mesh, NewtonConfig{});
        c.require(r.converged, "solve failed at nx=" + std::to_string(n));
        errors.push_back(error_function(r.u, p.exact, mesh));
    }
    const double rate1 = std::log2(errors[0] / errors[1]);
    const double rate2 = std::log2(errors[1] / errors[2]);
    char buf[128];
    std::snprintf(buf, sizeof buf, "observed orders %.3f, %.3f", rate1, rate2);
    c.require(rate1 >= 1.8 && rate1 <= 2.2, std::string("order out of [1.8,2.2]: ") + buf);
    c.require(rate2 >= 1.8 && rate2 <= 2.2, std::string("order out of [1.8,2.2]: ") + buf);
    const double wall = elapsed_since(t0);
    c.require(wall < 30.0, "convergence study exceeded 30 s");
    if (c.ok) c.detail = std::string(buf) + ", " + std::to_string(wall) + " s";
    return c;
}

// --- criterion 3 -----------------------------------------------------------
Check criterion3() {
    Check c;
    ProblemSpec p;
    p.f_def = {"zero", {}};
    p.exact_def = {"linear", {0.75, 2.0, -3.0}};
    for (int m = 0; m < 4; ++m) p.bc_defs[m] = {"dirichlet", 1.0, {"exact", {}}};
    p.finalize();

    std::vector<Mesh> meshes;
    meshes.push_back(build_rect_mesh(3, 2, {0, 0, 1, 1}));
    meshes.push_back(refine_elements(meshes[0], {0, 3}));          // red + green closure
    meshes.push_back(refine_elements(meshes[1], {2, 7, 9}));       // second generation
    meshes.push_back(build_rect_mesh(5, 7, {-1, 0.5, 2, 3}));      // anisotropic counts
    double worst = 0.0;
    for (const Mesh& mesh : meshes) {
        c.require(mesh.is_conforming(), "test mesh not conforming");
        NewtonResult r = newton_krylov_solve({}, p, mesh, NewtonConfig{});
        c.require(r.converged, "patch solve failed");
        for (const Node& n : mesh.nodes)
            worst = std::max(worst, std::abs(r.u[static_cast<size_t>(n.id)] -
                                             (0.75 + 2.0 * n.x - 3.0 * n.y)));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max nodal error %.3e", worst);
    c.require(worst <= 1e-10, std::string("patch test above 1e-10: ") + buf);
    if (c.ok) c.detail = buf;
    return c;
}

// --- criterion 4 -----------------------------------------------------------
Check criterion4() {
    Check c;
    ProblemSpec p;
    p.f_def = {"zero", {}};
    p.exact_def = {"linear", {0, 1, 0}};
    for (int m = 0; m < 4; ++m) p.bc_defs[m] = {"dirichlet", 1.0, {"exact", {}}};
    p.finalize();

    auto interior_error = [&](int per_side) {
        std::vector<Vec2> pts;
        for (int j = 1; j < 4; ++j)
            for (int i = 1; i < 4; ++i) pts.push_back({i / 4.0, j / 4.0});
        DrmSolution sol = drm_solve(p, make_rect_boundary({0, 0, 1, 1}, per_side), pts);
        double e = 0.0;
        for (size_t k = 0; k < pts.size(); ++k)
            e = std::max(e, std::abs(sol.u_internal[k] - pts[k].x));
        return e;
    };
    const double e32 = interior_error(8);
    const double e64 = interior_error(16);
    char buf[96];
    std::snprintf(buf, sizeof buf, "interior error %.3e at 32, %.3e at 64", e32, e64);
    c.require(e32 < 1e-2, std::string("32-element error above 1e-2: ") + buf);
    c.require(e64 < e32, std::string("error not strictly decreasing: ") + buf);

    for (int per_side : {1, 4, 8, 16}) {
        DrmSystem sys = assemble_hg(make_rect_boundary({0, 0, 1, 1}, per_side));
        for (int i = 0; i < sys.boundary.size(); ++i) {
            double rs = 0.0;
            for (int j = 0; j < sys.boundary.size(); ++j) rs += sys.H(i, j);
            c.require(std::abs(rs) <= 1e-10, "H row sum above 1e-10");
        }
    }
    DrmSystem tri = assemble_hg(make_polygon_boundary({{0, 0}, {2, 0}, {0.7, 1.1}}, 5));
    for (int i = 0; i < tri.boundary.size(); ++i) {
        double rs = 0.0;
        for (int j = 0; j < tri.boundary.size(); ++j) rs += tri.H(i, j);
        c.require(std::abs(rs) <= 1e-10, "triangle H row sum above 1e-10");
    }
    if (c.ok) c.detail = buf;
    return c;
}

// --- criterion 5 -----------------------------------------------------------
Check criterion5() {
    Check c;
    ProblemSpec spec;
    spec.f_def = {"zero", {}};
    spec.exact_def = {"quadratic_harmonic", {}};
    spec.bc_defs[0] = {"dirichlet", 1.0, {"exact", {}}};
    spec.bc_defs[1] = {"nonlinear", 4.0, {"exact", {}}};
    spec.bc_defs[2] = {"dirichlet", 1.0, {"exact", {}}};
    spec.bc_defs[3] = {"dirichlet", 1.0, {"exact", {}}};
    spec.finalize();
    Mesh mesh = build_rect_mesh(6, 6, {0, 0, 1, 1});

    // Jacobian agreement on random directions, fixed seed.
    Vector u(mesh.nodes.size(), 1.0);
    LinearOperator Ja = jacobian(u, spec, mesh, JacobianMode::analytic, 1.5e-8);
    LinearOperator Jf = jacobian(u, spec, mesh, JacobianMode::finite_difference, 1.5e-8);
    std::mt19937 rng(424242u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        Vector v(mesh.nodes.size());
        for (double& x : v) x = dist(rng);
        Vector a = Ja(v);
        Vector diff = a;
        axpy(-1.0, Jf(v), diff);
        worst_rel = std::max(worst_rel, norm2(diff) / (1.0 + norm2(a)));
    }
    char jb[64];
    std::snprintf(jb, sizeof jb, "jacobian agreement %.2e", worst_rel);
    c.require(worst_rel <= 1e-5, std::string("jacobian mismatch above 1e-5: ") + jb);

    // Superlinear decay of the residual over the final three iterations.
    NewtonConfig cfg;
    cfg.tol_residual = 1e-12;
    cfg.inner_tol = 1e-12;
    Vector u0(mesh.nodes.size(), 3.0);
    NewtonResult res = newton_krylov_solve(u0, spec, mesh, cfg);
    c.require(res.converged, "newton did not converge on the radiation benchmark");
    std::vector<double> norms;
    for (const NewtonTraceEntry& t : res.trace)
        if (t.residual_norm > 1e-13) norms.push_back(t.residual_norm);
    c.require(norms.size() >= 4, "too few iterations to test decay");
    if (norms.size() >= 4) {
        const size_t n = norms.size();
        const double q1 = norms[n - 2] / norms[n - 3];
        const double q2 = norms[n - 1] / norms[n - 2];
        c.require(q2 < q1 && q2 < 1.0 && q1 < 1.0,
                  "contraction ratios not superlinear over the last 3 iterations");
    }

    // Scalar reduced problem against bisection.
    ProblemSpec scalar;
    scalar.f_def = {"zero", {}};
    scalar.bc_defs[0] = {"neumann", 1.0, {"zero", {}}};
    scalar.bc_defs[1] = {"nonlinear", 4.0, {"constant", {7.3}}};
    scalar.bc_defs[2] = {"neumann", 1.0, {"zero", {}}};
    scalar.bc_defs[3] = {"dirichlet", 1.0, {"constant", {0.0}}};
    scalar.finalize();
    Mesh tiny = build_rect_mesh(1, 1, {0, 0, 1, 1});
    NewtonConfig scfg;
    scfg.tol_residual = 1e-12;
    scfg.inner_tol = 1e-12;
    NewtonResult sres = newton_krylov_solve(Vector(tiny.nodes.size(), 1.5), scalar, tiny, scfg);
    c.require(sres.converged, "scalar newton failed");
    double lo = 0.0, hi = 10.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (mid * mid * mid * mid < 7.3 ? lo : hi) = mid;
    }
    const double u_star = 0.5 * (lo + hi);
    for (int node : nonlinear_bc_nodes(tiny, scalar))
        c.require(std::abs(sres.u[static_cast<size_t>(node)] - u_star) <= 1e-8,
                  "scalar root differs from the bisection oracle beyond 1e-8");
    if (c.ok) c.detail = jb;
    return c;
}

// --- criterion 6 -----------------------------------------------------------
Check criterion6() {
    Check c;
    std::mt19937 rng(13579u);
    std::uniform_real_distribution<double> off(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 49);
        const bool spd = trial % 2 == 0;
        DenseMatrix d(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) d(i, j) = off(rng);
        if (spd)
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) s += std::abs(d(i, j));
            d(i, i) = s + 1.0 + std::abs(off(rng));
        }
        std::vector<Triplet> t;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t.push_back({i, j, d(i, j)});
        SparseMatrix A = SparseMatrix::from_triplets(n, n, t);
        Vector b(static_cast<size_t>(n));
        for (double& v : b) v = off(rng);

        Vector ref = dense_solve(d, b);
        auto [xg, sg] = gmres(A, b, {}, 1e-12, 10 * n, n);
        auto [xb, sb] = bicgstab(A, b, {}, 1e-12, 10 * n);
        auto [xs, ss] = gauss_seidel(A, b, {}, 1e-12, 5000);
        c.require(sg.converged && sb.converged && ss.converged, "a solver did not converge");
        for (int i = 0; i < n; ++i) {
            worst = std::max({worst, std::abs(xg[static_cast<size_t>(i)] - ref[static_cast<size_t>(i)]),
                              std::abs(xb[static_cast<size_t>(i)] - ref[static_cast<size_t>(i)]),
                              std::abs(xs[static_cast<size_t>(i)] - ref[static_cast<size_t>(i)])});
        }
        if (spd) {
            // Full-memory GMRES terminates within n steps on SPD systems.
            auto [xn, sn] = gmres(A, b, {}, 1e-8, n, n);
            c.require(sn.converged, "gmres exceeded n iterations on an SPD instance");
            c.require(sn.iterations <= n, "gmres iteration count above n");
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max deviation from direct solve %.2e", worst);
    c.require(worst <= 1e-8, std::string("solver disagreement above 1e-8: ") + buf);
    if (c.ok) c.detail = std::string("100 systems, ") + buf;
    return c;
}

// --- criterion 7 -----------------------------------------------------------
Check criterion7() {
    Check c;
    ProblemSpec p = sin_sin_problem();

    std::vector<std::pair<int, double>> uniform; // (nodes, error)
    for (int n : {8, 16, 32, 64}) {
        Mesh mesh = build_rect_mesh(n, n, {0, 0, 1, 1});
        NewtonResult r = newton_krylov_solve({}, p, mesh, NewtonConfig{});
        uniform.push_back({mesh.node_count(), error_function(r.u, p.exact, mesh)});
    }

    RefinementConfig rc;
    rc.marking_fraction = 0.3;
    rc.max_generations = 3;
    rc.delta = 1e-9;
    AdaptiveResult res = adaptive_solve(p, build_rect_mesh(8, 8, {0, 0, 1, 1}), NewtonConfig{}, rc);
    for (size_t k = 1; k < res.report.size(); ++k)
        c.require(res.report[k].l2_error <= res.report[k - 1].l2_error * (1.0 + 1e-9),
                  "per-generation error increased");

    // Matching error level attained by both runs.
    const double target = 0.016;
    int adaptive_nodes = -1;
    for (const AdaptiveGenerationRow& row : res.report)
        if (row.l2_error <= target) {
            adaptive_nodes = row.nodes;
            break;
        }
    int uniform_nodes = -1;
    for (const auto& [nodes, err] : uniform)
        if (err <= target) {
            uniform_nodes = nodes;
            break;
        }
    char buf[128];
    std::snprintf(buf, sizeof buf, "target %.3g: adaptive %d nodes, uniform %d nodes", target,
                  adaptive_nodes, uniform_nodes);
    c.require(adaptive_nodes > 0, "adaptive run never reached the target error");
    c.require(uniform_nodes > 0, "uniform run never reached the target error");
    c.require(adaptive_nodes <= uniform_nodes, std::string("adaptive needed more nodes: ") + buf);

    // Degenerate configurations reduce to the single-solve path.
    RefinementConfig zero;
    zero.max_generations = 0;
    zero.epsilon = 1e-6;
    Mesh mesh = build_rect_mesh(5, 5, {0, 0, 1, 1});
    AdaptiveResult single = adaptive_solve(p, mesh, NewtonConfig{}, zero);
    NewtonResult direct = newton_krylov_solve({}, p, mesh, NewtonConfig{});
    c.require(single.u == direct.u, "max_generations=0 differs from a single solve");
    c.require(single.report.size() == 1, "max_generations=0 ran more than one generation");

    RefinementConfig nomark;
    nomark.epsilon = 1e308;
    nomark.max_generations = 5;
    AdaptiveResult empty = adaptive_solve(p, mesh, NewtonConfig{}, nomark);
    c.require(empty.report.size() == 1 && empty.mesh.element_count() == mesh.element_count(),
              "empty mark set still refined the mesh");
    c.require(empty.u == direct.u, "empty mark run differs from a single solve");
    if (c.ok) c.detail = buf;
    return c;
}

// --- criterion 8 -----------------------------------------------------------
Check criterion8() {
    Check c;
    ProblemSpec p;
    p.f_def = {"zero", {}};
    p.exact_def = {"linear", {0, 1, 0}};
    for (int m = 0; m < 4; ++m) p.bc_defs[m] = {"dirichlet", 1.0, {"exact", {}}};
    p.finalize();
    Mesh mesh = build_rect_mesh(8, 8, {0, 0, 1, 1});

    HybridSolution empty = hybrid_solve(p, mesh, partition_domain(mesh, std::set<int>{}),
                                        HybridConfig{}, NewtonConfig{});
    HybridSolution direct_drm = drm_nodal_solve(p, mesh);
    double dmax = 0.0;
    for (size_t k = 0; k < empty.u.size(); ++k)
        dmax = std::max(dmax, std::abs(empty.u[k] - direct_drm.u[k]));
    c.require(dmax <= 1e-12, "empty-region hybrid differs from drm_solve beyond 1e-12");

    std::set<int> all;
    for (const Element& e : mesh.elements) all.insert(e.id);
    HybridSolution allfem =
        hybrid_solve(p, mesh, partition_domain(mesh, all), HybridConfig{}, NewtonConfig{});
    NewtonResult direct = newton_krylov_solve({}, p, mesh, NewtonConfig{});
    double fmax = 0.0;
    for (size_t k = 0; k < allfem.u.size(); ++k)
        fmax = std::max(fmax, std::abs(allfem.u[k] - direct.u[k]));
    c.require(fmax <= 1e-12, "all-fem hybrid differs from the newton pipeline beyond 1e-12");

    // Corner-patch coupling on the Laplace u = x test.
    std::set<int> patch;
    for (const Element& e : mesh.elements) {
        auto pc = mesh.element_coords(e.id);
        if ((pc[0].x + pc[1].x + pc[2].x) / 3.0 < 0.375 &&
            (pc[0].y + pc[1].y + pc[2].y) / 3.0 < 0.375)
            patch.insert(e.id);
    }
    HybridConfig hc;
    hc.coupling_tol = 1e-6;
    HybridSolution sol = hybrid_solve(p, mesh, partition_domain(mesh, patch), hc, NewtonConfig{});
    c.require(sol.converged, "corner-patch coupling did not converge");
    c.require(!sol.trace_change.empty() && sol.trace_change.back() < 1e-6,
              "interface trace change above the 1e-6 coupling tolerance");
    double emax = 0.0;
    for (const Node& n : mesh.nodes)
        emax = std::max(emax, std::abs(sol.u[static_cast<size_t>(n.id)] - n.x));
    c.require(emax < 5e-2, "corner-patch solution off the exact harmonic beyond 5e-2");
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "degenerate gaps %.1e / %.1e, interface change %.2e, error %.2e", dmax, fmax,
                  sol.trace_change.back(), emax);
    if (c.ok) c.detail = buf;
    return c;
}

// --- criterion 9 -----------------------------------------------------------
Check criterion9() {
    Check c;
    namespace fs = std::filesystem;
    if (g_cli_path.empty()) {
        c.require(false, "no --cli path provided");
        return c;
    }
    const fs::path base = fs::temp_directory_path() / "hdrm_acceptance";
    fs::remove_all(base);
    const std::string bench = g_bench_dir + "/heat_radiation.prob";
    for (const char* run : {"runA", "runB"}) {
        const fs::path dir = base / run;
        fs::create_directories(dir);
        const std::string cmd = "\"" + g_cli_path + "\" compare \"" + bench + "\" --out \"" +
                                dir.string() + "\" > \"" + (dir / "stdout.txt").string() +
                                "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        c.require(rc == 0, std::string("cli compare failed in ") + run);
    }
    std::vector<std::string> files = {"convergence.csv", "errors.csv", "delta.csv",
                                      "series_hdrm.dat", "series_dual_reciprocity.dat",
                                      "series_dynamic_relaxation.dat",
                                      "series_gauss_seidel.dat"};
    for (const std::string& name : files) {
        std::ifstream a(base / "runA" / name, std::ios::binary);
        std::ifstream b(base / "runB" / name, std::ios::binary);
        c.require(a.good() && b.good(), name + " missing");
        if (!a.good() || !b.good()) continue;
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        c.require(sa.str() == sb.str(), name + " differs between consecutive runs");
        c.require(!sa.str().empty(), name + " is empty");
    }
    fs::remove_all(base);
    if (c.ok) c.detail = std::to_string(files.size()) + " files byte-identical";
    return c;
}

struct Criterion {
    int number;
    const char* name;
    std::function<Check()> run;
};

const std::vector<Criterion> criteria = {
    {1, "paper-claim status: delta arithmetic and benchmark ordering", criterion1},
    {2, "manufactured-solution convergence order", criterion2},
    {3, "patch test on conforming meshes", criterion3},
    {4, "dual-reciprocity verification", criterion4},
    {5, "newton-krylov jacobians, decay, bisection oracle", criterion5},
    {6, "linear-algebra oracle equivalence", criterion6},
    {7, "adaptive efficiency and degenerate configs", criterion7},
    {8, "hybrid degeneracy and interface agreement", criterion8},
    {9, "byte-identical compare outputs", criterion9},
};

} // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) selected = std::atoi(argv[++i]);
        else if (arg == "--cli" && i + 1 < argc) g_cli_path = argv[++i];
        else if (arg == "--benchmarks" && i + 1 < argc) g_bench_dir = argv[++i];
        else {
            std::fprintf(stderr, "usage: %s [--criterion N] [--cli PATH] [--benchmarks DIR]\n",
                         argv[0]);
            return 2;
        }
    }

    int failures = 0;
    for (const Criterion& cr : criteria) {
        if (selected != 0 && cr.number != selected) continue;
        Check result;
        try {
            result = cr.run();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s criterion %d: %s%s%s\n", result.ok ? "PASS" : "FAIL", cr.number, cr.name,
                    result.detail.empty() ? "" : " -- ", result.detail.c_str());
        if (!result.ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
