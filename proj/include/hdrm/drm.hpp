#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hdrm/errors.hpp"
#include "hdrm/linalg.hpp"
#include "hdrm/problem.hpp"
#include "hdrm/quadrature.hpp"

namespace hdrm {

/// Constant boundary element: straight segment, collocation at the
/// midpoint, outward normal on the right of the a->b direction (outward
/// for counter-clockwise traversal).
struct BoundarySegment {
    Vec2 a, b;
    int marker = 0;

    Vec2 midpoint() const { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }
    double length() const { return (b - a).norm(); }
    Vec2 normal() const {
        const Vec2 t = b - a;
        const double L = t.norm();
        return {t.y / L, -t.x / L};
    }
};

/// Closed counter-clockwise chain of constant boundary elements.
struct BoundaryDiscretization {
    std::vector<BoundarySegment> segments;

    int size() const { return static_cast<int>(segments.size()); }

    void validate() const {
        if (segments.size() < 3)
            throw Error(ErrorKind::invalid_discretization,
                        "boundary needs at least 3 elements");
        double area2 = 0.0;
        for (size_t i = 0; i < segments.size(); ++i) {
            const BoundarySegment& s = segments[i];
            if (s.length() <= 0.0)
                throw Error(ErrorKind::invalid_discretization, "zero-length boundary element");
            const BoundarySegment& next = segments[(i + 1) % segments.size()];
            if ((next.a - s.b).norm() > 1e-12 * (1.0 + s.length()))
                throw Error(ErrorKind::invalid_discretization, "boundary chain is not closed");
            area2 += s.a.x * s.b.y - s.b.x * s.a.y;
        }
        if (area2 <= 0.0)
            throw Error(ErrorKind::invalid_discretization,
                        "boundary must be ordered counter-clockwise");
    }
};

/// Uniform subdivision of each polygon edge; markers are edge indices.
inline BoundaryDiscretization make_polygon_boundary(const std::vector<Vec2>& vertices,
                                                    int per_edge) {
    if (vertices.size() < 3 || per_edge < 1)
        throw Error(ErrorKind::invalid_discretization, "polygon needs >= 3 vertices");
    BoundaryDiscretization bd;
    for (size_t v = 0; v < vertices.size(); ++v) {
        const Vec2 a = vertices[v];
        const Vec2 b = vertices[(v + 1) % vertices.size()];
        for (int k = 0; k < per_edge; ++k) {
            const double t0 = static_cast<double>(k) / per_edge;
            const double t1 = static_cast<double>(k + 1) / per_edge;
            bd.segments.push_back({{a.x + (b.x - a.x) * t0, a.y + (b.y - a.y) * t0},
                                   {a.x + (b.x - a.x) * t1, a.y + (b.y - a.y) * t1},
                                   static_cast<int>(v)});
        }
    }
    bd.validate();
    return bd;
}

/// Rectangle boundary with the mesh marker convention
/// (bottom 0, right 1, top 2, left 3).
inline BoundaryDiscretization make_rect_boundary(const std::array<double, 4>& rect,
                                                 int per_side) {
    return make_polygon_boundary({{rect[0], rect[1]},
                                  {rect[2], rect[1]},
                                  {rect[2], rect[3]},
                                  {rect[0], rect[3]}},
                                 per_side);
}

/// Free-space Green's function of the 2D Laplacian, -(1/2pi) ln|x - xi|.
inline double fundamental_solution(Vec2 x, Vec2 xi) {
    const double r = (x - xi).norm();
    if (r == 0.0)
        throw Error(ErrorKind::singularity, "fundamental_solution: coincident points");
    return -std::log(r) / (2.0 * 3.14159265358979323846);
}

namespace detail {

inline constexpr double two_pi = 2.0 * 3.14159265358979323846;

inline double point_segment_distance(Vec2 p, const BoundarySegment& s) {
    const Vec2 d = s.b - s.a;
    const double L2 = d.dot(d);
    double t = (p - s.a).dot(d) / L2;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 proj{s.a.x + t * d.x, s.a.y + t * d.y};
    return (p - proj).norm();
}

/// int_seg dG/dn dGamma by the signed subtended angle: exact for straight
/// constant elements.
inline double h_entry_analytic(const BoundarySegment& s, Vec2 x) {
    const Vec2 va = s.a - x;
    const Vec2 vb = s.b - x;
    const double cross = va.x * vb.y - va.y * vb.x;
    const double dotp = va.dot(vb);
    return -std::atan2(cross, dotp) / two_pi;
}

/// int_seg G dGamma in closed form.
inline double g_entry_analytic(const BoundarySegment& s, Vec2 x) {
    const double L = s.length();
    const Vec2 t{(s.b.x - s.a.x) / L, (s.b.y - s.a.y) / L};
    const Vec2 n = s.normal();
    const double t0 = (x - s.a).dot(t);
    const double d = (x - s.a).dot(n);
    auto F = [&](double sx) {
        const double r2 = d * d + sx * sx;
        double v = -sx;
        if (r2 > 0.0) v += 0.5 * sx * std::log(r2);
        if (d != 0.0) v += d * std::atan(sx / d);
        return v;
    };
    return -(F(L - t0) - F(-t0)) / two_pi;
}

/// Gauss-Legendre segment quadrature of the kernels, with panel
/// subdivision in the near field.
template <class K>
double segment_quadrature(const BoundarySegment& s, Vec2 x, K&& kernel) {
    const double L = s.length();
    const int panels = point_segment_distance(x, s) < 2.0 * L ? 4 : 1;
    const QuadratureRule& rule = segment_rule(4);
    const Vec2 n = s.normal();
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double ta = static_cast<double>(p) / panels;
        const double tb = static_cast<double>(p + 1) / panels;
        const double half = 0.5 * (tb - ta) * L;
        for (size_t q = 0; q < rule.points.size(); ++q) {
            const double t = ta + (tb - ta) * 0.5 * (1.0 + rule.points[q].x);
            const Vec2 xi{s.a.x + (s.b.x - s.a.x) * t, s.a.y + (s.b.y - s.a.y) * t};
            sum += rule.weights[q] * half * kernel(xi, n, x);
        }
    }
    return sum;
}

inline double h_entry_quadrature(const BoundarySegment& s, Vec2 x) {
    return segment_quadrature(s, x, [](Vec2 xi, Vec2 n, Vec2 xp) {
        const Vec2 r = xi - xp;
        const double r2 = r.dot(r);
        return -(r.dot(n)) / (two_pi * r2);
    });
}

inline double g_entry_quadrature(const BoundarySegment& s, Vec2 x) {
    return segment_quadrature(s, x, [](Vec2 xi, Vec2 n, Vec2 xp) {
        (void)n;
        return -std::log((xi - xp).norm()) / two_pi;
    });
}

/// Dual-reciprocity basis f = 1 + r with particular solution
/// u_hat = r^2/4 + r^3/9 (lap u_hat = f) and its normal derivative.
inline double rbf_basis(Vec2 x, Vec2 center) { return 1.0 + (x - center).norm(); }

inline double u_hat(Vec2 x, Vec2 center) {
    const double r = (x - center).norm();
    return r * r / 4.0 + r * r * r / 9.0;
}

inline double q_hat(Vec2 x, Vec2 center, Vec2 n) {
    const Vec2 d = x - center;
    const double r = d.norm();
    return (0.5 + r / 3.0) * d.dot(n);
}

} // namespace detail

/// Collocated boundary-element system. H carries the double-layer
/// influence (diagonal fixed by the zero-row-sum rigid-body condition),
/// G the single-layer influence (diagonal by the analytic self-integral).
/// F_rbf interpolates sources on the 1 + r basis at all centers
/// (boundary midpoints followed by the internal points).
struct DrmSystem {
    BoundaryDiscretization boundary;
    std::vector<Vec2> internal_points;
    DenseMatrix H, G;
    DenseMatrix F_rbf;

    std::vector<Vec2> centers() const {
        std::vector<Vec2> c;
        c.reserve(boundary.segments.size() + internal_points.size());
        for (const BoundarySegment& s : boundary.segments) c.push_back(s.midpoint());
        for (const Vec2& p : internal_points) c.push_back(p);
        return c;
    }
};

inline DrmSystem assemble_hg(const BoundaryDiscretization& boundary,
                             std::vector<Vec2> internal_points = {}) {
    boundary.validate();
    const int n = boundary.size();
    double scale = 0.0;
    for (const BoundarySegment& s : boundary.segments) scale += s.length();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const Vec2 d = boundary.segments[static_cast<size_t>(i)].midpoint() -
                           boundary.segments[static_cast<size_t>(j)].midpoint();
            if (d.norm() < 1e-12 * scale)
                throw Error(ErrorKind::invalid_discretization,
                            "coincident collocation points " + std::to_string(i) + ", " +
                                std::to_string(j));
        }

    DrmSystem sys;
    sys.boundary = boundary;
    sys.internal_points = std::move(internal_points);
    sys.H = DenseMatrix(n, n);
    sys.G = DenseMatrix(n, n);
    for (int i = 0; i < n; ++i) {
        const Vec2 xi = boundary.segments[static_cast<size_t>(i)].midpoint();
        double hsum = 0.0;
        for (int j = 0; j < n; ++j) {
            const BoundarySegment& s = boundary.segments[static_cast<size_t>(j)];
            if (j == i) {
                const double L = s.length();
                sys.G(i, i) = L / detail::two_pi * (1.0 - std::log(L / 2.0));
                continue; // H diagonal set below
            }
            const double h = detail::h_entry_quadrature(s, xi);
            sys.H(i, j) = h;
            hsum += h;
            sys.G(i, j) = detail::g_entry_quadrature(s, xi);
        }
        sys.H(i, i) = -hsum; // u = const, q = 0 is exactly representable
    }

    const auto c = sys.centers();
    const int nc = static_cast<int>(c.size());
    sys.F_rbf = DenseMatrix(nc, nc);
    for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j)
            sys.F_rbf(i, j) = detail::rbf_basis(c[static_cast<size_t>(i)], c[static_cast<size_t>(j)]);
    return sys;
}

/// Coefficients alpha with F_rbf alpha = f(centers) for the 1 + r basis.
inline Vector rbf_expand(const ScalarField& f, const std::vector<Vec2>& centers) {
    const int n = static_cast<int>(centers.size());
    DenseMatrix F(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            F(i, j) = detail::rbf_basis(centers[static_cast<size_t>(i)], centers[static_cast<size_t>(j)]);
    Vector rhs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        rhs[static_cast<size_t>(i)] = f(centers[static_cast<size_t>(i)].x, centers[static_cast<size_t>(i)].y);
    try {
        return dense_solve(F, rhs);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::singular_matrix)
            throw Error(ErrorKind::degenerate_centers, "rbf_expand: degenerate centers");
        throw;
    }
}

/// Evaluates the 1 + r interpolant with coefficients alpha.
inline double rbf_evaluate(const Vector& alpha, const std::vector<Vec2>& centers, Vec2 x) {
    double s = 0.0;
    for (size_t k = 0; k < centers.size(); ++k)
        s += alpha[k] * detail::rbf_basis(x, centers[k]);
    return s;
}

/// Boundary data for one constant element.
struct DrmBc {
    BcKind kind = BcKind::dirichlet;
    double value = 0.0; // Dirichlet trace or Neumann flux at the midpoint
};

struct DrmSolution {
    Vector u_boundary;
    Vector q_boundary;
    Vector u_internal;
    Vector alpha;
};

inline double drm_evaluate(const DrmSystem& sys, const DrmSolution& sol, Vec2 x);

/// Solves H u - G q = (H Uhat - G Qhat) alpha with the mixed boundary data,
/// where alpha expands the source b = lap(u) on the 1 + r basis, then
/// evaluates u at the internal points.
inline DrmSolution drm_solve_system(const DrmSystem& sys, const std::vector<DrmBc>& bcs,
                                    const ScalarField& source_b) {
    const int n = sys.boundary.size();
    if (static_cast<int>(bcs.size()) != n)
        throw Error(ErrorKind::dimension_mismatch, "drm_solve: one bc per boundary element");
    bool any_dirichlet = false;
    for (const DrmBc& bc : bcs) {
        if (bc.kind == BcKind::dirichlet) any_dirichlet = true;
        else if (bc.kind != BcKind::neumann)
            throw Error(ErrorKind::unsupported, "drm_solve: bcs must be dirichlet or neumann");
    }
    if (!any_dirichlet)
        throw Error(ErrorKind::non_unique_bc,
                    "drm_solve: all-Neumann data leaves the solution defined up to a constant");

    const auto centers = sys.centers();
    const int nc = static_cast<int>(centers.size());
    DrmSolution sol;
    sol.alpha.assign(static_cast<size_t>(nc), 0.0);

    Vector b(static_cast<size_t>(nc), 0.0);
    double bmax = 0.0;
    if (source_b) {
        for (int i = 0; i < nc; ++i) {
            b[static_cast<size_t>(i)] = source_b(centers[static_cast<size_t>(i)].x,
                                                 centers[static_cast<size_t>(i)].y);
            bmax = std::max(bmax, std::abs(b[static_cast<size_t>(i)]));
        }
    }
    if (bmax > 0.0) {
        try {
            sol.alpha = dense_solve(sys.F_rbf, b);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::singular_matrix)
                throw Error(ErrorKind::degenerate_centers, "drm_solve: degenerate rbf centers");
            throw;
        }
    }

    // Combined particular solution and flux at the boundary collocation points.
    Vector uhat(static_cast<size_t>(n), 0.0), qhat(static_cast<size_t>(n), 0.0);
    if (bmax > 0.0)
        for (int j = 0; j < n; ++j) {
            const BoundarySegment& s = sys.boundary.segments[static_cast<size_t>(j)];
            const Vec2 mid = s.midpoint();
            const Vec2 nrm = s.normal();
            double us = 0.0, qs = 0.0;
            for (int k = 0; k < nc; ++k) {
                us += sol.alpha[static_cast<size_t>(k)] * detail::u_hat(mid, centers[static_cast<size_t>(k)]);
                qs += sol.alpha[static_cast<size_t>(k)] * detail::q_hat(mid, centers[static_cast<size_t>(k)], nrm);
            }
            uhat[static_cast<size_t>(j)] = us;
            qhat[static_cast<size_t>(j)] = qs;
        }
    Vector d = sys.H.apply(uhat);
    axpy(-1.0, sys.G.apply(qhat), d);

    // Mixed system: unknown q on Dirichlet elements, unknown u on Neumann.
    DenseMatrix M(n, n);
    Vector rhs = d;
    for (int j = 0; j < n; ++j) {
        if (bcs[static_cast<size_t>(j)].kind == BcKind::dirichlet) {
            const double ubar = bcs[static_cast<size_t>(j)].value;
            for (int i = 0; i < n; ++i) {
                M(i, j) = -sys.G(i, j);
                rhs[static_cast<size_t>(i)] -= sys.H(i, j) * ubar;
            }
        } else {
            const double qbar = bcs[static_cast<size_t>(j)].value;
            for (int i = 0; i < n; ++i) {
                M(i, j) = sys.H(i, j);
                rhs[static_cast<size_t>(i)] += sys.G(i, j) * qbar;
            }
        }
    }
    Vector z = dense_solve(M, rhs);
    sol.u_boundary.assign(static_cast<size_t>(n), 0.0);
    sol.q_boundary.assign(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        if (bcs[static_cast<size_t>(j)].kind == BcKind::dirichlet) {
            sol.u_boundary[static_cast<size_t>(j)] = bcs[static_cast<size_t>(j)].value;
            sol.q_boundary[static_cast<size_t>(j)] = z[static_cast<size_t>(j)];
        } else {
            sol.u_boundary[static_cast<size_t>(j)] = z[static_cast<size_t>(j)];
            sol.q_boundary[static_cast<size_t>(j)] = bcs[static_cast<size_t>(j)].value;
        }
    }

    sol.u_internal.assign(sys.internal_points.size(), 0.0);
    for (size_t p = 0; p < sys.internal_points.size(); ++p)
        sol.u_internal[p] = drm_evaluate(sys, sol, sys.internal_points[p]);
    return sol;
}

/// Evaluates the DRM representation at an interior point using exact
/// segment integrals (keeps constants reproduced to machine precision).
inline double drm_evaluate(const DrmSystem& sys, const DrmSolution& sol, Vec2 x) {
    const auto centers = sys.centers();
    const int n = sys.boundary.size();
    double u = 0.0;
    const bool with_source = norm2(sol.alpha) > 0.0;
    for (int j = 0; j < n; ++j) {
        const BoundarySegment& s = sys.boundary.segments[static_cast<size_t>(j)];
        const double hj = detail::h_entry_analytic(s, x);
        const double gj = detail::g_entry_analytic(s, x);
        u += gj * sol.q_boundary[static_cast<size_t>(j)] - hj * sol.u_boundary[static_cast<size_t>(j)];
        if (with_source) {
            const Vec2 mid = s.midpoint();
            const Vec2 nrm = s.normal();
            double us = 0.0, qs = 0.0;
            for (size_t k = 0; k < centers.size(); ++k) {
                us += sol.alpha[k] * detail::u_hat(mid, centers[k]);
                qs += sol.alpha[k] * detail::q_hat(mid, centers[k], nrm);
            }
            u += hj * us - gj * qs;
        }
    }
    if (with_source)
        for (size_t k = 0; k < centers.size(); ++k)
            u += sol.alpha[k] * detail::u_hat(x, centers[k]);
    return u;
}

/// Source of lap(u) = b for the DRM region: from -lap(u) + C = f,
/// b = C - f, with C taken at u = 0 (u-dependent C belongs to the FEM
/// region of the hybrid method).
inline ScalarField drm_source_of(const ProblemSpec& problem) {
    if (!problem.f && !problem.C) return nullptr;
    const ScalarField f = problem.f;
    const CoefficientC C = problem.C;
    return [f, C](double x, double y) {
        const double fv = f ? f(x, y) : 0.0;
        const double cv = C ? C(x, y, 0.0) : 0.0;
        return cv - fv;
    };
}

/// Dual-reciprocity solve of the problem's operator restricted to an
/// identity principal part: -lap(u) + C(x) = f with Dirichlet/Neumann
/// data taken from the problem's segment markers.
inline DrmSolution drm_solve(const ProblemSpec& problem, const DrmSystem& sys) {
    // The DRM path requires A = I; variable principal parts belong to the
    // FEM region of the hybrid method.
    for (const Vec2 probe : {Vec2{problem.rect[0], problem.rect[1]},
                             Vec2{problem.rect[2], problem.rect[3]},
                             Vec2{0.5 * (problem.rect[0] + problem.rect[2]),
                                  0.5 * (problem.rect[1] + problem.rect[3])}}) {
        const Mat2 a = problem.A ? problem.A(probe.x, probe.y, 0.0) : Mat2{};
        if (std::abs(a.a11 - 1.0) > 1e-12 || std::abs(a.a22 - 1.0) > 1e-12 ||
            std::abs(a.a12) > 1e-12 || std::abs(a.a21) > 1e-12)
            throw Error(ErrorKind::unsupported,
                        "drm_solve: principal part must be the identity on the DRM region");
    }
    std::vector<DrmBc> bcs;
    bcs.reserve(sys.boundary.segments.size());
    for (const BoundarySegment& s : sys.boundary.segments) {
        auto it = problem.bcs.find(s.marker);
        if (it == problem.bcs.end())
            throw Error(ErrorKind::validation,
                        "drm_solve: no boundary condition for marker " + std::to_string(s.marker));
        if (it->second.kind == BcKind::nonlinear)
            throw Error(ErrorKind::unsupported,
                        "drm_solve: nonlinear boundary conditions are handled by the newton module");
        const Vec2 mid = s.midpoint();
        bcs.push_back({it->second.kind, it->second.value(mid.x, mid.y)});
    }
    return drm_solve_system(sys, bcs, drm_source_of(problem));
}

inline DrmSolution drm_solve(const ProblemSpec& problem, const BoundaryDiscretization& boundary,
                             const std::vector<Vec2>& internal_points) {
    return drm_solve(problem, assemble_hg(boundary, internal_points));
}

} // namespace hdrm
