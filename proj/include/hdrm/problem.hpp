#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hdrm/config.hpp"
#include "hdrm/errors.hpp"
#include "hdrm/mesh.hpp"

namespace hdrm {

struct Mat2 {
    double a11 = 1, a12 = 0, a21 = 0, a22 = 1;
};

using ScalarField = std::function<double(double, double)>;
using CoefficientA = std::function<Mat2(double, double, double)>;  // A(x, y, u)
using CoefficientB = std::function<Vec2(double, double, double)>;  // B(x, y, u)
using CoefficientC = std::function<double(double, double, double)>; // C(x, y, u)

enum class BcKind { dirichlet, neumann, nonlinear };

/// One boundary condition per boundary-segment marker. For `nonlinear`
/// the condition is u^power = value(x) collocated at the segment nodes.
struct BoundaryCondition {
    BcKind kind = BcKind::dirichlet;
    ScalarField value;
    double power = 1.0;
};

/// Declarative name + parameters of a built-in field; the serializable
/// face of the std::function coefficients.
struct FieldDef {
    std::string name = "zero";
    std::vector<double> params;

    bool operator==(const FieldDef&) const = default;
};

struct BcDef {
    std::string kind = "dirichlet"; // dirichlet | neumann | nonlinear
    double power = 1.0;
    FieldDef value;

    bool operator==(const BcDef&) const = default;
};

inline const std::array<std::string, 4> segment_names = {"bottom", "right", "top", "left"};

/// Problem definition: governing operator
///   -div(A(x,u) grad u) + B(x,u) . grad u + C(x,u) = f   in Omega
/// on an axis-aligned rectangle, with one boundary condition per segment
/// marker (bottom 0, right 1, top 2, left 3).
struct ProblemSpec {
    std::string title = "problem";
    std::array<double, 4> rect{0, 0, 1, 1};
    int nx = 8, ny = 8;

    FieldDef a_def{"identity", {}};
    FieldDef b_def{"zero", {}};
    FieldDef c_def{"zero", {}};
    FieldDef f_def{"zero", {}};
    FieldDef exact_def{"none", {}};
    std::map<int, BcDef> bc_defs;

    std::vector<std::string> methods;
    NewtonConfig newton;
    RefinementConfig refine;
    HybridConfig hybrid;
    BenchConfig bench;

    // Materialized callables (populated by finalize()).
    CoefficientA A;
    CoefficientB B;
    CoefficientC C;
    ScalarField f;
    ScalarField exact;            // null if exact_def is "none"
    std::map<int, BoundaryCondition> bcs;

    bool has_exact() const { return static_cast<bool>(exact); }

    bool operator==(const ProblemSpec& o) const {
        return title == o.title && rect == o.rect && nx == o.nx && ny == o.ny &&
               a_def == o.a_def && b_def == o.b_def && c_def == o.c_def && f_def == o.f_def &&
               exact_def == o.exact_def && bc_defs == o.bc_defs && methods == o.methods &&
               newton == o.newton && refine == o.refine && hybrid == o.hybrid && bench == o.bench;
    }

    Mesh build_mesh() const { return build_rect_mesh(nx, ny, rect); }

    void finalize();
};

namespace detail {

inline void require_params(const FieldDef& d, size_t n, std::vector<std::string>& errs) {
    if (d.params.size() != n)
        errs.push_back("field '" + d.name + "' expects " + std::to_string(n) +
                       " parameter(s), got " + std::to_string(d.params.size()));
}

inline ScalarField make_scalar_field(const FieldDef& d, std::vector<std::string>& errs) {
    const double pi = 3.14159265358979323846;
    if (d.name == "zero") {
        require_params(d, 0, errs);
        return [](double, double) { return 0.0; };
    }
    if (d.name == "constant") {
        require_params(d, 1, errs);
        const double v = d.params.empty() ? 0.0 : d.params[0];
        return [v](double, double) { return v; };
    }
    if (d.name == "linear") {
        require_params(d, 3, errs);
        const double a = d.params.size() > 0 ? d.params[0] : 0.0;
        const double b = d.params.size() > 1 ? d.params[1] : 0.0;
        const double c = d.params.size() > 2 ? d.params[2] : 0.0;
        return [a, b, c](double x, double y) { return a + b * x + c * y; };
    }
    if (d.name == "sin_sin") {
        require_params(d, 0, errs);
        return [pi](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
    }
    if (d.name == "sin_sin_source") { // f = -lap(sin_sin)
        require_params(d, 0, errs);
        return [pi](double x, double y) {
            return 2.0 * pi * pi * std::sin(pi * x) * std::sin(pi * y);
        };
    }
    if (d.name == "x_squared") {
        require_params(d, 0, errs);
        return [](double x, double) { return x * x; };
    }
    if (d.name == "quadratic_harmonic") { // x^2 - y^2 + 2
        require_params(d, 0, errs);
        return [](double x, double y) { return x * x - y * y + 2.0; };
    }
    errs.push_back("unknown scalar field '" + d.name + "'");
    return [](double, double) { return 0.0; };
}

inline CoefficientA make_coefficient_a(const FieldDef& d, std::vector<std::string>& errs) {
    if (d.name == "identity") {
        require_params(d, 0, errs);
        return [](double, double, double) { return Mat2{}; };
    }
    if (d.name == "constant") {
        require_params(d, 1, errs);
        const double k = d.params.empty() ? 1.0 : d.params[0];
        return [k](double, double, double) { return Mat2{k, 0, 0, k}; };
    }
    if (d.name == "aniso") {
        require_params(d, 2, errs);
        const double ax = d.params.size() > 0 ? d.params[0] : 1.0;
        const double ay = d.params.size() > 1 ? d.params[1] : 1.0;
        return [ax, ay](double, double, double) { return Mat2{ax, 0, 0, ay}; };
    }
    if (d.name == "u_scaled") { // (1 + k u) I, Picard-frozen in assembly
        require_params(d, 1, errs);
        const double k = d.params.empty() ? 0.0 : d.params[0];
        return [k](double, double, double u) {
            const double s = 1.0 + k * u;
            return Mat2{s, 0, 0, s};
        };
    }
    errs.push_back("unknown A coefficient '" + d.name + "'");
    return [](double, double, double) { return Mat2{}; };
}

inline CoefficientB make_coefficient_b(const FieldDef& d, std::vector<std::string>& errs) {
    if (d.name == "zero") {
        require_params(d, 0, errs);
        return [](double, double, double) { return Vec2{0, 0}; };
    }
    if (d.name == "constant") {
        require_params(d, 2, errs);
        const double bx = d.params.size() > 0 ? d.params[0] : 0.0;
        const double by = d.params.size() > 1 ? d.params[1] : 0.0;
        return [bx, by](double, double, double) { return Vec2{bx, by}; };
    }
    errs.push_back("unknown B coefficient '" + d.name + "'");
    return [](double, double, double) { return Vec2{0, 0}; };
}

inline CoefficientC make_coefficient_c(const FieldDef& d, std::vector<std::string>& errs) {
    if (d.name == "zero") {
        require_params(d, 0, errs);
        return [](double, double, double) { return 0.0; };
    }
    if (d.name == "constant") {
        require_params(d, 1, errs);
        const double v = d.params.empty() ? 0.0 : d.params[0];
        return [v](double, double, double) { return v; };
    }
    if (d.name == "linear_u") { // C = k u, treated explicitly at the iterate
        require_params(d, 1, errs);
        const double k = d.params.empty() ? 0.0 : d.params[0];
        return [k](double, double, double u) { return k * u; };
    }
    errs.push_back("unknown C coefficient '" + d.name + "'");
    return [](double, double, double) { return 0.0; };
}

} // namespace detail

inline void ProblemSpec::finalize() {
    std::vector<std::string> errs;
    A = detail::make_coefficient_a(a_def, errs);
    B = detail::make_coefficient_b(b_def, errs);
    C = detail::make_coefficient_c(c_def, errs);
    f = detail::make_scalar_field(f_def, errs);
    if (exact_def.name == "none") {
        exact = nullptr;
    } else {
        exact = detail::make_scalar_field(exact_def, errs);
    }
    bcs.clear();
    for (const auto& [marker, def] : bc_defs) {
        BoundaryCondition bc;
        if (def.kind == "dirichlet") bc.kind = BcKind::dirichlet;
        else if (def.kind == "neumann") bc.kind = BcKind::neumann;
        else if (def.kind == "nonlinear") bc.kind = BcKind::nonlinear;
        else errs.push_back("segment " + segment_names[static_cast<size_t>(marker)] +
                            ": unknown bc kind '" + def.kind + "'");
        bc.power = def.power;
        if (bc.kind == BcKind::nonlinear && def.power <= 0)
            errs.push_back("segment " + segment_names[static_cast<size_t>(marker)] +
                           ": nonlinear power must be positive");
        if (def.value.name == "exact") {
            if (!exact) {
                errs.push_back("segment " + segment_names[static_cast<size_t>(marker)] +
                               ": bc value 'exact' requires an exact solution");
            } else if (bc.kind == BcKind::dirichlet) {
                bc.value = exact;
            } else if (bc.kind == BcKind::nonlinear) {
                const ScalarField ex = exact;
                const double p = bc.power;
                bc.value = [ex, p](double x, double y) { return std::pow(ex(x, y), p); };
            } else {
                errs.push_back("segment " + segment_names[static_cast<size_t>(marker)] +
                               ": bc value 'exact' is not supported for neumann");
            }
        } else {
            bc.value = detail::make_scalar_field(def.value, errs);
        }
        bcs[marker] = bc;
    }
    if (!errs.empty()) {
        std::string msg = "problem validation failed:";
        for (const std::string& e : errs) msg += "\n  - " + e;
        throw Error(ErrorKind::validation, msg);
    }
}

// ---------------------------------------------------------------------------
// Text format: '#' comments, [section] headers, key = value lines.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

struct ProblemParser {
    std::vector<std::string> errors;

    void fail(int line, const std::string& msg) {
        errors.push_back("line " + std::to_string(line) + ": " + msg);
    }

    double num(const std::string& tok, int line) {
        try {
            size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail(line, "malformed number '" + tok + "'");
            return 0.0;
        }
    }

    long integer(const std::string& tok, int line) {
        try {
            size_t pos = 0;
            const long v = std::stol(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail(line, "malformed integer '" + tok + "'");
            return 0;
        }
    }

    FieldDef field(const std::vector<std::string>& toks, size_t from, int line) {
        FieldDef d;
        if (toks.size() <= from) {
            fail(line, "missing field name");
            return d;
        }
        d.name = toks[from];
        for (size_t i = from + 1; i < toks.size(); ++i) d.params.push_back(num(toks[i], line));
        return d;
    }
};

} // namespace detail

/// Parses the sectioned key = value problem format. Collects every
/// validation problem instead of stopping at the first and reports them
/// with line context in a single error.
inline ProblemSpec parse_problem(std::istream& is) {
    detail::ProblemParser p;
    ProblemSpec spec;
    std::string section;
    std::string raw;
    int line = 0;
    bool saw_methods = false;

    while (std::getline(is, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                p.fail(line, "malformed section header '" + s + "'");
                continue;
            }
            section = s.substr(1, s.size() - 2);
            static const std::vector<std::string> known = {
                "problem", "domain", "coefficients", "bc", "exact",
                "methods", "newton", "refine", "hybrid", "bench"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                p.fail(line, "unknown section '" + section + "'");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            p.fail(line, "expected key = value, got '" + s + "'");
            continue;
        }
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        const auto toks = detail::split_ws(value);

        if (section == "problem") {
            if (key == "title") spec.title = value;
            else p.fail(line, "unknown key '" + key + "' in [problem]");
        } else if (section == "domain") {
            if (key == "rect") {
                if (toks.size() != 4) p.fail(line, "rect expects 4 numbers");
                for (size_t i = 0; i < toks.size() && i < 4; ++i)
                    spec.rect[i] = p.num(toks[i], line);
            } else if (key == "nx") spec.nx = static_cast<int>(p.integer(value, line));
            else if (key == "ny") spec.ny = static_cast<int>(p.integer(value, line));
            else p.fail(line, "unknown key '" + key + "' in [domain]");
        } else if (section == "coefficients") {
            if (key == "A") spec.a_def = p.field(toks, 0, line);
            else if (key == "B") spec.b_def = p.field(toks, 0, line);
            else if (key == "C") spec.c_def = p.field(toks, 0, line);
            else if (key == "f") spec.f_def = p.field(toks, 0, line);
            else p.fail(line, "unknown key '" + key + "' in [coefficients]");
        } else if (section == "bc") {
            int marker = -1;
            for (size_t m = 0; m < segment_names.size(); ++m)
                if (key == segment_names[m]) marker = static_cast<int>(m);
            if (marker < 0) {
                p.fail(line, "unknown boundary segment '" + key + "'");
                continue;
            }
            BcDef def;
            if (toks.empty()) {
                p.fail(line, "empty boundary condition for segment '" + key + "'");
                continue;
            }
            def.kind = toks[0];
            if (def.kind == "dirichlet" || def.kind == "neumann") {
                def.value = p.field(toks, 1, line);
            } else if (def.kind == "nonlinear") {
                if (toks.size() < 2) {
                    p.fail(line, "nonlinear bc expects: nonlinear <power> <field>");
                    continue;
                }
                def.power = p.num(toks[1], line);
                def.value = p.field(toks, 2, line);
            } else {
                p.fail(line, "unknown bc kind '" + def.kind + "'");
                continue;
            }
            spec.bc_defs[marker] = def;
        } else if (section == "exact") {
            if (key == "u") spec.exact_def = p.field(toks, 0, line);
            else p.fail(line, "unknown key '" + key + "' in [exact]");
        } else if (section == "methods") {
            if (key == "list") {
                saw_methods = true;
                spec.methods = toks;
                static const std::vector<std::string> known = {
                    "hdrm", "gauss_seidel", "dynamic_relaxation", "dual_reciprocity"};
                for (const std::string& m : toks)
                    if (std::find(known.begin(), known.end(), m) == known.end())
                        p.fail(line, "unknown method '" + m + "'");
            } else p.fail(line, "unknown key '" + key + "' in [methods]");
        } else if (section == "newton") {
            if (key == "tol_residual") spec.newton.tol_residual = p.num(value, line);
            else if (key == "tol_step_h1") spec.newton.tol_step_h1 = p.num(value, line);
            else if (key == "max_iter") spec.newton.max_iter = static_cast<int>(p.integer(value, line));
            else if (key == "jacobian") {
                if (value == "analytic") spec.newton.jacobian_mode = JacobianMode::analytic;
                else if (value == "finite_difference")
                    spec.newton.jacobian_mode = JacobianMode::finite_difference;
                else p.fail(line, "jacobian must be 'analytic' or 'finite_difference'");
            } else if (key == "fd_step") spec.newton.fd_step = p.num(value, line);
            else if (key == "damping") spec.newton.damping = p.num(value, line);
            else if (key == "inner_tol") spec.newton.inner_tol = p.num(value, line);
            else if (key == "inner_max_iter")
                spec.newton.inner_max_iter = static_cast<int>(p.integer(value, line));
            else if (key == "inner_restart")
                spec.newton.inner_restart = static_cast<int>(p.integer(value, line));
            else p.fail(line, "unknown key '" + key + "' in [newton]");
        } else if (section == "refine") {
            if (key == "epsilon") spec.refine.epsilon = p.num(value, line);
            else if (key == "delta") spec.refine.delta = p.num(value, line);
            else if (key == "max_generations")
                spec.refine.max_generations = static_cast<int>(p.integer(value, line));
            else if (key == "marking_fraction") spec.refine.marking_fraction = p.num(value, line);
            else p.fail(line, "unknown key '" + key + "' in [refine]");
        } else if (section == "hybrid") {
            if (key == "coupling_tol") spec.hybrid.coupling_tol = p.num(value, line);
            else if (key == "max_sweeps")
                spec.hybrid.max_sweeps = static_cast<int>(p.integer(value, line));
            else if (key == "overlap_layers")
                spec.hybrid.overlap_layers = static_cast<int>(p.integer(value, line));
            else p.fail(line, "unknown key '" + key + "' in [hybrid]");
        } else if (section == "bench") {
            if (key == "gauss_seidel.nx")
                spec.bench.gauss_seidel_nx = static_cast<int>(p.integer(value, line));
            else if (key == "gauss_seidel.max_iter")
                spec.bench.gauss_seidel_max_iter = p.integer(value, line);
            else if (key == "dynamic_relaxation.nx")
                spec.bench.dynamic_relaxation_nx = static_cast<int>(p.integer(value, line));
            else if (key == "dynamic_relaxation.max_iter")
                spec.bench.dynamic_relaxation_max_iter = p.integer(value, line);
            else if (key == "dual_reciprocity.nx")
                spec.bench.dual_reciprocity_nx = static_cast<int>(p.integer(value, line));
            else if (key == "hdrm.nx") spec.bench.hdrm_nx = static_cast<int>(p.integer(value, line));
            else if (key == "hdrm.patch_layers")
                spec.bench.hdrm_patch_layers = static_cast<int>(p.integer(value, line));
            else p.fail(line, "unknown key '" + key + "' in [bench]");
        } else {
            p.fail(line, "key '" + key + "' outside any known section");
        }
    }

    for (size_t m = 0; m < segment_names.size(); ++m)
        if (!spec.bc_defs.count(static_cast<int>(m)))
            p.errors.push_back("missing boundary condition for segment '" + segment_names[m] + "'");
    if (!saw_methods)
        spec.methods = {"hdrm", "gauss_seidel", "dynamic_relaxation", "dual_reciprocity"};
    if (spec.nx < 1 || spec.ny < 1) p.errors.push_back("nx and ny must be >= 1");
    if (!(spec.rect[2] > spec.rect[0]) || !(spec.rect[3] > spec.rect[1]))
        p.errors.push_back("rect is degenerate");

    if (!p.errors.empty()) {
        std::string msg = "invalid problem file:";
        for (const std::string& e : p.errors) msg += "\n  - " + e;
        throw Error(ErrorKind::validation, msg);
    }

    spec.finalize();
    try {
        spec.newton.validate();
        spec.refine.validate();
        spec.hybrid.validate();
        spec.bench.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::validation, std::string("invalid problem file:\n  - ") + e.what());
    }
    return spec;
}

namespace detail {

inline std::string format_number(double v) {
    if (v == static_cast<long>(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%ld", static_cast<long>(v));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_field(const FieldDef& d) {
    std::string s = d.name;
    for (double v : d.params) s += " " + format_number(v);
    return s;
}

} // namespace detail

/// Writes the spec in the same text format parse_problem reads; the two
/// functions round-trip.
inline std::string serialize_problem(const ProblemSpec& spec) {
    std::ostringstream os;
    using detail::format_field;
    using detail::format_number;
    os << "[problem]\ntitle = " << spec.title << "\n\n";
    os << "[domain]\nrect = " << format_number(spec.rect[0]) << " " << format_number(spec.rect[1])
       << " " << format_number(spec.rect[2]) << " " << format_number(spec.rect[3]) << "\n";
    os << "nx = " << spec.nx << "\nny = " << spec.ny << "\n\n";
    os << "[coefficients]\n";
    os << "A = " << format_field(spec.a_def) << "\n";
    os << "B = " << format_field(spec.b_def) << "\n";
    os << "C = " << format_field(spec.c_def) << "\n";
    os << "f = " << format_field(spec.f_def) << "\n\n";
    os << "[bc]\n";
    for (const auto& [marker, def] : spec.bc_defs) {
        os << segment_names[static_cast<size_t>(marker)] << " = " << def.kind;
        if (def.kind == "nonlinear") os << " " << format_number(def.power);
        os << " " << format_field(def.value) << "\n";
    }
    os << "\n[exact]\nu = " << format_field(spec.exact_def) << "\n\n";
    os << "[methods]\nlist =";
    for (const std::string& m : spec.methods) os << " " << m;
    os << "\n\n[newton]\n";
    os << "tol_residual = " << format_number(spec.newton.tol_residual) << "\n";
    os << "tol_step_h1 = " << format_number(spec.newton.tol_step_h1) << "\n";
    os << "max_iter = " << spec.newton.max_iter << "\n";
    os << "jacobian = "
       << (spec.newton.jacobian_mode == JacobianMode::analytic ? "analytic" : "finite_difference")
       << "\n";
    os << "fd_step = " << format_number(spec.newton.fd_step) << "\n";
    os << "damping = " << format_number(spec.newton.damping) << "\n";
    os << "inner_tol = " << format_number(spec.newton.inner_tol) << "\n";
    os << "inner_max_iter = " << spec.newton.inner_max_iter << "\n";
    os << "inner_restart = " << spec.newton.inner_restart << "\n\n";
    os << "[refine]\n";
    os << "epsilon = " << format_number(spec.refine.epsilon) << "\n";
    os << "delta = " << format_number(spec.refine.delta) << "\n";
    os << "max_generations = " << spec.refine.max_generations << "\n";
    os << "marking_fraction = " << format_number(spec.refine.marking_fraction) << "\n\n";
    os << "[hybrid]\n";
    os << "coupling_tol = " << format_number(spec.hybrid.coupling_tol) << "\n";
    os << "max_sweeps = " << spec.hybrid.max_sweeps << "\n";
    os << "overlap_layers = " << spec.hybrid.overlap_layers << "\n\n";
    os << "[bench]\n";
    os << "gauss_seidel.nx = " << spec.bench.gauss_seidel_nx << "\n";
    os << "gauss_seidel.max_iter = " << spec.bench.gauss_seidel_max_iter << "\n";
    os << "dynamic_relaxation.nx = " << spec.bench.dynamic_relaxation_nx << "\n";
    os << "dynamic_relaxation.max_iter = " << spec.bench.dynamic_relaxation_max_iter << "\n";
    os << "dual_reciprocity.nx = " << spec.bench.dual_reciprocity_nx << "\n";
    os << "hdrm.nx = " << spec.bench.hdrm_nx << "\n";
    os << "hdrm.patch_layers = " << spec.bench.hdrm_patch_layers << "\n";
    return os.str();
}

/// Nodes lying on boundary edges with the given marker.
inline std::set<int> nodes_on_marker(const Mesh& mesh, int marker) {
    std::set<int> out;
    for (const BoundaryEdge& e : mesh.boundary_edges)
        if (e.marker == marker) {
            out.insert(e.node_ids[0]);
            out.insert(e.node_ids[1]);
        }
    return out;
}

} // namespace hdrm
