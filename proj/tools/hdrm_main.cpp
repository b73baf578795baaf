#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hdrm/hdrm.hpp"

namespace {

bool verbose() {
    const char* v = std::getenv("HDRM_VERBOSE");
    return v != nullptr && std::string(v) != "0";
}

hdrm::ProblemSpec load_problem(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw hdrm::Error(hdrm::ErrorKind::io, "cannot open problem file: " + path);
    return hdrm::parse_problem(is);
}

void write_solution_csv(const hdrm::Mesh& mesh, const hdrm::Vector& u,
                        const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw hdrm::Error(hdrm::ErrorKind::io, "cannot write " + path.string());
    os << "node,x,y,u\n";
    char buf[128];
    for (const hdrm::Node& n : mesh.nodes) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g\n", n.id, n.x, n.y,
                      u[static_cast<size_t>(n.id)]);
        os << buf;
    }
}

int run_solve(const std::string& file, std::string method, const std::string& out_dir,
              bool adaptive) {
    hdrm::ProblemSpec spec = load_problem(file);
    std::filesystem::create_directories(out_dir);

    if (adaptive) {
        hdrm::AdaptiveResult res =
            hdrm::adaptive_solve(spec, spec.build_mesh(), spec.newton, spec.refine);
        {
            std::ofstream os(std::filesystem::path(out_dir) / "adapt_report.csv");
            hdrm::write_adapt_report_csv(res, os);
        }
        write_solution_csv(res.mesh, res.u, std::filesystem::path(out_dir) / "solution.csv");
        {
            std::ofstream os(std::filesystem::path(out_dir) / "final_mesh.txt");
            hdrm::write_mesh(res.mesh, os);
        }
        std::printf("adaptive solve: %zu generation(s), %d elements, stop: %s\n",
                    res.report.size(), res.mesh.element_count(), res.stop_reason.c_str());
        if (!res.report.empty() && res.report.back().has_error)
            std::printf("final L2 error: %.6e\n", res.report.back().l2_error);
        return res.newton_converged ? 0 : 3;
    }

    if (method.empty()) method = spec.methods.empty() ? "hdrm" : spec.methods.front();
    hdrm::SolverReport report = hdrm::run_method(spec, method);
    write_solution_csv(report.mesh, report.solution,
                       std::filesystem::path(out_dir) / "solution.csv");
    {
        std::ofstream os(std::filesystem::path(out_dir) / "trace.csv");
        os << "iteration,error\n";
        char buf[80];
        for (const auto& [it, err] : report.trace) {
            std::snprintf(buf, sizeof buf, "%ld,%.12g\n", it, err);
            os << buf;
        }
    }
    std::printf("%s: %ld iteration(s), wall %.3fs", report.method.c_str(), report.iterations,
                report.wall_seconds);
    if (spec.has_exact()) std::printf(", final L2 error %.6e", report.final_error);
    std::printf("%s\n", report.converged ? "" : "  [did not converge]");
    return report.converged ? 0 : 3;
}

int run_compare(const std::string& file, const std::string& out_dir) {
    hdrm::ProblemSpec spec = load_problem(file);
    if (verbose())
        std::fprintf(stderr, "comparing %zu method(s) on '%s'\n", spec.methods.size(),
                     spec.title.c_str());
    hdrm::BenchmarkReport report = hdrm::compare_methods(spec);
    hdrm::emit_outputs(report, out_dir);
    hdrm::print_report(report, std::cout);
    for (const hdrm::SolverReport& r : report.methods)
        if (!r.converged) return 3;
    return 0;
}

int run_mesh_info(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw hdrm::Error(hdrm::ErrorKind::io, "cannot open mesh file: " + file);
    hdrm::Mesh mesh = hdrm::read_mesh(is);
    std::printf("nodes %d elements %d edges %zu generation %d\n", mesh.node_count(),
                mesh.element_count(), mesh.boundary_edges.size(), mesh.generation);
    std::printf("total area %.12g\n", mesh.total_area());
    std::printf("conforming %s\n", mesh.is_conforming() ? "yes" : "no");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D hybrid dual-reciprocity solver and benchmark harness"};
    app.require_subcommand(1);

    std::string problem_file, mesh_file, method, out_dir = ".";
    bool adaptive = false;

    CLI::App* solve = app.add_subcommand("solve", "solve a problem file with one method");
    solve->add_option("problem-file", problem_file)->required();
    solve->add_option("--method", method,
                      "hdrm | gauss_seidel | dynamic_relaxation | dual_reciprocity");
    solve->add_option("--out", out_dir, "output directory");
    solve->add_flag("--adaptive", adaptive, "run the adaptive refinement loop");

    CLI::App* compare = app.add_subcommand("compare", "run every configured method and tabulate");
    compare->add_option("problem-file", problem_file)->required();
    compare->add_option("--out", out_dir, "output directory");

    CLI::App* info = app.add_subcommand("mesh-info", "inspect a mesh file");
    info->add_option("mesh-file", mesh_file)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve(problem_file, method, out_dir, adaptive);
        if (compare->parsed()) return run_compare(problem_file, out_dir);
        if (info->parsed()) return run_mesh_info(mesh_file);
    } catch (const hdrm::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.kind()) {
            case hdrm::ErrorKind::validation:
            case hdrm::ErrorKind::io:
                return 2;
            default:
                return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
