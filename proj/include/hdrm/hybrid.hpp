#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hdrm/adapt.hpp"
#include "hdrm/config.hpp"
#include "hdrm/drm.hpp"
#include "hdrm/fem.hpp"
#include "hdrm/mesh.hpp"
#include "hdrm/newton.hpp"
#include "hdrm/problem.hpp"

namespace hdrm {

/// Marker for artificial interface edges created by region extraction;
/// never collides with problem segment markers.
inline constexpr int interface_marker = 1 << 20;

/// Split of the mesh into a FEM-critical element set and its DRM-handled
/// complement, with the shared interface nodes.
struct RegionPartition {
    std::set<int> fem_elements;
    std::set<int> interface_nodes;
};

namespace detail {

inline std::set<int> nodes_of_elements(const Mesh& mesh, const std::set<int>& elems) {
    std::set<int> nodes;
    for (int id : elems)
        for (int n : mesh.element(id).node_ids) nodes.insert(n);
    return nodes;
}

inline std::set<int> interface_nodes_of(const Mesh& mesh, const std::set<int>& fem) {
    std::set<int> inside = nodes_of_elements(mesh, fem);
    std::set<int> shared;
    for (const Element& e : mesh.elements)
        if (!fem.count(e.id))
            for (int n : e.node_ids)
                if (inside.count(n)) shared.insert(n);
    return shared;
}

} // namespace detail

inline RegionPartition partition_domain(const Mesh& mesh, const std::set<int>& explicit_fem) {
    for (int id : explicit_fem)
        if (id < 0 || id >= mesh.element_count())
            throw Error(ErrorKind::not_found,
                        "partition_domain: unknown element " + std::to_string(id));
    RegionPartition p;
    p.fem_elements = explicit_fem;
    p.interface_nodes = detail::interface_nodes_of(mesh, explicit_fem);
    return p;
}

/// Elements whose indicator exceeds the threshold form the FEM region.
inline RegionPartition partition_domain(const Mesh& mesh, const IndicatorField& indicators,
                                        double threshold) {
    if (static_cast<int>(indicators.values.size()) != mesh.element_count())
        throw Error(ErrorKind::dimension_mismatch, "partition_domain: indicator size mismatch");
    std::set<int> fem;
    for (int k = 0; k < mesh.element_count(); ++k)
        if (indicators.values[static_cast<size_t>(k)] > threshold) fem.insert(k);
    return partition_domain(mesh, fem);
}

/// Grows an element set by node adjacency.
inline std::set<int> grow_element_set(const Mesh& mesh, std::set<int> elems, int layers) {
    for (int l = 0; l < layers; ++l) {
        std::set<int> nodes = detail::nodes_of_elements(mesh, elems);
        std::set<int> grown = elems;
        for (const Element& e : mesh.elements) {
            if (grown.count(e.id)) continue;
            for (int n : e.node_ids)
                if (nodes.count(n)) {
                    grown.insert(e.id);
                    break;
                }
        }
        elems = std::move(grown);
    }
    return elems;
}

/// Elements owning a boundary edge with one of the given markers.
inline std::set<int> elements_touching_markers(const Mesh& mesh, const std::set<int>& markers) {
    std::set<int> out;
    for (const BoundaryEdge& e : mesh.boundary_edges)
        if (markers.count(e.marker)) out.insert(e.element_id);
    return out;
}

namespace detail {

struct Submesh {
    Mesh mesh;
    std::vector<int> to_global;
    std::map<int, int> to_local;
    std::set<int> rim_local_nodes; // artificial-interface nodes
};

inline Submesh extract_submesh(const Mesh& mesh, const std::set<int>& elems) {
    Submesh sub;
    for (int n : nodes_of_elements(mesh, elems)) {
        sub.to_local[n] = static_cast<int>(sub.to_global.size());
        sub.to_global.push_back(n);
    }
    for (size_t k = 0; k < sub.to_global.size(); ++k) {
        const Node& n = mesh.nodes[static_cast<size_t>(sub.to_global[k])];
        sub.mesh.nodes.push_back({static_cast<int>(k), n.x, n.y});
    }
    std::map<std::pair<int, int>, int> edge_count;
    for (int id : elems) {
        const Element& e = mesh.element(id);
        Element local = e;
        local.id = sub.mesh.element_count();
        for (int k = 0; k < 3; ++k)
            local.node_ids[static_cast<size_t>(k)] = sub.to_local.at(e.node_ids[static_cast<size_t>(k)]);
        for (int k = 0; k < 3; ++k)
            edge_count[edge_key(local.node_ids[static_cast<size_t>(k)],
                                local.node_ids[static_cast<size_t>((k + 1) % 3)])]++;
        sub.mesh.elements.push_back(local);
    }
    std::map<std::pair<int, int>, int> global_marker;
    for (const BoundaryEdge& b : mesh.boundary_edges) {
        auto a = sub.to_local.find(b.node_ids[0]);
        auto c = sub.to_local.find(b.node_ids[1]);
        if (a != sub.to_local.end() && c != sub.to_local.end())
            global_marker[edge_key(a->second, c->second)] = b.marker;
    }
    std::map<std::pair<int, int>, int> owner;
    for (const Element& e : sub.mesh.elements)
        for (int k = 0; k < 3; ++k)
            owner[edge_key(e.node_ids[static_cast<size_t>(k)],
                           e.node_ids[static_cast<size_t>((k + 1) % 3)])] = e.id;
    for (const auto& [key, count] : edge_count) {
        if (count != 1) continue;
        auto gb = global_marker.find(key);
        if (gb != global_marker.end()) {
            sub.mesh.boundary_edges.push_back({{key.first, key.second}, owner.at(key), gb->second});
        } else {
            sub.mesh.boundary_edges.push_back(
                {{key.first, key.second}, owner.at(key), interface_marker});
            sub.rim_local_nodes.insert(key.first);
            sub.rim_local_nodes.insert(key.second);
        }
    }
    return sub;
}

/// Directed boundary edge of an element subset; the region lies on the
/// left of a -> b.
struct LoopEdge {
    int a = 0, b = 0;  // global node ids
    int marker = -1;   // original marker or interface_marker
};

/// Chains the boundary edges of an element subset into one closed
/// counter-clockwise loop. Throws if the boundary is not a single simple
/// loop (regions with holes are outside the coupling's reach).
inline std::vector<LoopEdge> trace_region_boundary(const Mesh& mesh, const std::set<int>& elems) {
    std::map<std::pair<int, int>, int> count;
    for (int id : elems) {
        const Element& e = mesh.element(id);
        for (int k = 0; k < 3; ++k)
            count[edge_key(e.node_ids[static_cast<size_t>(k)],
                           e.node_ids[static_cast<size_t>((k + 1) % 3)])]++;
    }
    std::map<std::pair<int, int>, int> markers;
    for (const BoundaryEdge& b : mesh.boundary_edges)
        markers[edge_key(b.node_ids[0], b.node_ids[1])] = b.marker;

    std::map<int, LoopEdge> outgoing; // start node -> directed boundary edge
    int total = 0;
    for (int id : elems) {
        const Element& e = mesh.element(id);
        for (int k = 0; k < 3; ++k) {
            const int a = e.node_ids[static_cast<size_t>(k)];
            const int b = e.node_ids[static_cast<size_t>((k + 1) % 3)];
            if (count.at(edge_key(a, b)) != 1) continue;
            auto m = markers.find(edge_key(a, b));
            if (outgoing.count(a))
                throw Error(ErrorKind::unsupported,
                            "region boundary is not a simple loop (pinched node)");
            outgoing[a] = {a, b, m == markers.end() ? interface_marker : m->second};
            ++total;
        }
    }
    if (total < 3) throw Error(ErrorKind::unsupported, "region boundary too small");
    std::vector<LoopEdge> loop;
    LoopEdge cur = outgoing.begin()->second;
    for (int k = 0; k < total; ++k) {
        loop.push_back(cur);
        auto next = outgoing.find(cur.b);
        if (next == outgoing.end())
            throw Error(ErrorKind::unsupported, "region boundary chain is broken");
        cur = next->second;
    }
    if (loop.back().b != loop.front().a || static_cast<int>(loop.size()) != total)
        throw Error(ErrorKind::unsupported,
                    "region boundary has multiple loops; the coupling needs a patch "
                    "touching the domain boundary");
    return loop;
}

inline Vec2 node_pos(const Mesh& mesh, int id) {
    const Node& n = mesh.nodes[static_cast<size_t>(id)];
    return {n.x, n.y};
}

/// Residual of the collocated system H u - G q = (H Uhat - G Qhat) alpha,
/// recomputed from a returned solution.
inline double drm_system_residual(const DrmSystem& sys, const DrmSolution& sol) {
    const int n = sys.boundary.size();
    Vector lhs = sys.H.apply(sol.u_boundary);
    axpy(-1.0, sys.G.apply(sol.q_boundary), lhs);
    if (norm2(sol.alpha) > 0.0) {
        Vector uhat(static_cast<size_t>(n), 0.0), qhat(static_cast<size_t>(n), 0.0);
        const auto centers = sys.centers();
        for (int j = 0; j < n; ++j) {
            const Vec2 mid = sys.boundary.segments[static_cast<size_t>(j)].midpoint();
            const Vec2 nrm = sys.boundary.segments[static_cast<size_t>(j)].normal();
            for (size_t k = 0; k < centers.size(); ++k) {
                uhat[static_cast<size_t>(j)] += sol.alpha[k] * u_hat(mid, centers[k]);
                qhat[static_cast<size_t>(j)] += sol.alpha[k] * q_hat(mid, centers[k], nrm);
            }
        }
        Vector rhs = sys.H.apply(uhat);
        axpy(-1.0, sys.G.apply(qhat), rhs);
        axpy(-1.0, rhs, lhs);
    }
    return norm2(lhs);
}

} // namespace detail

struct HybridSolution {
    Vector u;
    double fem_residual_norm = 0.0;
    double drm_residual_norm = 0.0;
    std::string method = "hdrm";
    int sweeps = 0;
    bool converged = false;
    double interface_gap = 0.0;        // |fem - drm| on the overlap at exit
    std::vector<double> trace_change;  // per-sweep interface update magnitude
};

using SweepObserver = std::function<void(int, const Vector&)>;

/// Pure dual-reciprocity solve evaluated at every mesh node: boundary
/// elements are the mesh boundary edges, internal points the interior
/// nodes. Shared by the degenerate hybrid partition and the plain
/// dual-reciprocity baseline.
inline HybridSolution drm_nodal_solve(const ProblemSpec& problem, const Mesh& mesh) {
    std::set<int> all;
    for (const Element& e : mesh.elements) all.insert(e.id);
    const auto loop = detail::trace_region_boundary(mesh, all);

    BoundaryDiscretization bd;
    for (const detail::LoopEdge& e : loop)
        bd.segments.push_back({detail::node_pos(mesh, e.a), detail::node_pos(mesh, e.b), e.marker});

    std::set<int> boundary_nodes;
    for (const detail::LoopEdge& e : loop) {
        boundary_nodes.insert(e.a);
        boundary_nodes.insert(e.b);
    }
    std::vector<int> internal_ids;
    std::vector<Vec2> internal_pts;
    for (const Node& n : mesh.nodes)
        if (!boundary_nodes.count(n.id)) {
            internal_ids.push_back(n.id);
            internal_pts.push_back({n.x, n.y});
        }

    DrmSystem sys = assemble_hg(bd, internal_pts);
    DrmSolution sol = drm_solve(problem, sys);

    HybridSolution out;
    out.method = "dual_reciprocity";
    out.converged = true;
    out.sweeps = 1;
    out.u.assign(mesh.nodes.size(), 0.0);
    for (size_t k = 0; k < internal_ids.size(); ++k)
        out.u[static_cast<size_t>(internal_ids[k])] = sol.u_internal[k];

    // Boundary nodes: Dirichlet data directly, Neumann nodes from the
    // adjacent collocation values (Dirichlet wins at shared corners).
    std::set<int> dirichlet_owned;
    for (const auto& [marker, bc] : problem.bcs)
        if (bc.kind == BcKind::dirichlet)
            for (int n : nodes_on_marker(mesh, marker)) {
                const Vec2 p = detail::node_pos(mesh, n);
                out.u[static_cast<size_t>(n)] = bc.value(p.x, p.y);
                dirichlet_owned.insert(n);
            }
    std::map<int, std::pair<double, int>> neumann_avg;
    for (size_t j = 0; j < loop.size(); ++j)
        for (int n : {loop[j].a, loop[j].b})
            if (!dirichlet_owned.count(n)) {
                auto& acc = neumann_avg[n];
                acc.first += sol.u_boundary[j];
                acc.second += 1;
            }
    for (const auto& [node, acc] : neumann_avg)
        out.u[static_cast<size_t>(node)] = acc.first / acc.second;

    out.drm_residual_norm = detail::drm_system_residual(sys, sol);
    return out;
}

/// H-DRM coupling. The critical element set, grown by the configured
/// overlap, is solved by FEM/Newton with Dirichlet rim data taken from the
/// dual-reciprocity region; the complement region is solved by the DRM
/// with Dirichlet interface data taken from the FEM trace; the sweeps
/// alternate until the interface data settles. Nonlinear segments must be
/// covered by the FEM region.
inline HybridSolution hybrid_solve(const ProblemSpec& problem, const Mesh& mesh,
                                   const RegionPartition& partition, const HybridConfig& config,
                                   const NewtonConfig& newton_config,
                                   const SweepObserver& observer = nullptr) {
    config.validate();

    if (partition.fem_elements.empty()) {
        for (const auto& [marker, bc] : problem.bcs)
            if (bc.kind == BcKind::nonlinear)
                throw Error(ErrorKind::unsupported,
                            "hybrid_solve: nonlinear segments need a FEM region covering them");
        HybridSolution out = drm_nodal_solve(problem, mesh);
        out.method = "hdrm";
        if (observer) observer(1, out.u);
        return out;
    }
    if (static_cast<int>(partition.fem_elements.size()) == mesh.element_count()) {
        NewtonResult res = newton_krylov_solve({}, problem, mesh, newton_config);
        HybridSolution out;
        out.u = res.u;
        out.converged = res.converged;
        out.sweeps = 1;
        out.fem_residual_norm = res.final_residual_norm;
        if (observer) observer(1, out.u);
        return out;
    }

    const std::set<int> core = partition.fem_elements;
    const std::set<int> extended = grow_element_set(mesh, core, config.overlap_layers);
    detail::Submesh sub = detail::extract_submesh(mesh, extended);
    sub.mesh.validate();

    std::set<int> complement;
    for (const Element& e : mesh.elements)
        if (!core.count(e.id)) complement.insert(e.id);
    const auto loop = detail::trace_region_boundary(mesh, complement);
    for (const detail::LoopEdge& e : loop) {
        if (e.marker == interface_marker) continue;
        if (problem.bcs.at(e.marker).kind == BcKind::nonlinear)
            throw Error(ErrorKind::unsupported,
                        "hybrid_solve: nonlinear segment left outside the FEM region");
    }

    BoundaryDiscretization bd;
    for (const detail::LoopEdge& e : loop)
        bd.segments.push_back({detail::node_pos(mesh, e.a), detail::node_pos(mesh, e.b), e.marker});

    std::set<int> complement_boundary_nodes;
    for (const detail::LoopEdge& e : loop) {
        complement_boundary_nodes.insert(e.a);
        complement_boundary_nodes.insert(e.b);
    }
    const std::set<int> extended_nodes = detail::nodes_of_elements(mesh, extended);
    std::vector<int> internal_ids;
    std::vector<Vec2> internal_pts;
    std::map<int, size_t> internal_index;
    for (int n : detail::nodes_of_elements(mesh, complement))
        if (!complement_boundary_nodes.count(n)) {
            internal_index[n] = internal_ids.size();
            internal_ids.push_back(n);
            internal_pts.push_back(detail::node_pos(mesh, n));
        }

    DrmSystem drm_sys = assemble_hg(bd, internal_pts);
    const ScalarField drm_source = drm_source_of(problem);

    std::set<int> dirichlet_nodes;
    for (const auto& [marker, bc] : problem.bcs)
        if (bc.kind == BcKind::dirichlet)
            for (int n : nodes_on_marker(mesh, marker)) dirichlet_nodes.insert(n);

    // Rim nodes of the FEM patch and where their Dirichlet pins come from:
    // problem data on the outer boundary, DRM evaluation otherwise.
    std::vector<int> rim_internal;                    // complement-interior rim nodes
    std::map<int, std::vector<size_t>> rim_segments;  // rim node on outer boundary -> loop idx
    for (int local : sub.rim_local_nodes) {
        const int g = sub.to_global[static_cast<size_t>(local)];
        if (dirichlet_nodes.count(g)) continue;
        auto it = internal_index.find(g);
        if (it != internal_index.end()) {
            rim_internal.push_back(g);
            continue;
        }
        std::vector<size_t> segs;
        for (size_t j = 0; j < loop.size(); ++j)
            if (loop[j].a == g || loop[j].b == g) segs.push_back(j);
        if (segs.empty())
            throw Error(ErrorKind::unsupported,
                        "hybrid_solve: rim node " + std::to_string(g) +
                            " has no dual-reciprocity data; grow the FEM region");
        rim_segments[g] = segs;
    }

    // Start iterate: Dirichlet data pinned, nonlinear nodes at the pointwise
    // root of their target so dB does not vanish.
    Vector u(mesh.nodes.size(), 0.0);
    for (const auto& [marker, bc] : problem.bcs) {
        if (bc.kind == BcKind::dirichlet)
            for (int n : nodes_on_marker(mesh, marker)) {
                const Vec2 p = detail::node_pos(mesh, n);
                u[static_cast<size_t>(n)] = bc.value(p.x, p.y);
            }
        if (bc.kind == BcKind::nonlinear)
            for (int n : nodes_on_marker(mesh, marker)) {
                if (dirichlet_nodes.count(n)) continue;
                const Vec2 p = detail::node_pos(mesh, n);
                u[static_cast<size_t>(n)] =
                    std::pow(std::max(std::abs(bc.value(p.x, p.y)), 1e-8), 1.0 / bc.power);
            }
    }

    std::map<int, double> rim_data;
    for (int g : rim_internal) rim_data[g] = u[static_cast<size_t>(g)];
    for (const auto& [g, segs] : rim_segments) rim_data[g] = u[static_cast<size_t>(g)];

    HybridSolution out;
    out.u = u;
    NewtonResult fem_res;
    DrmSolution drm_sol;
    for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        // FEM half-sweep on the extended patch with the current rim data.
        std::map<int, double> extra;
        for (const auto& [g, v] : rim_data) extra[sub.to_local.at(g)] = v;
        Vector u0(sub.mesh.nodes.size());
        for (size_t k = 0; k < sub.to_global.size(); ++k)
            u0[k] = out.u[static_cast<size_t>(sub.to_global[k])];
        fem_res = newton_krylov_solve(u0, problem, sub.mesh, newton_config, extra);
        for (size_t k = 0; k < sub.to_global.size(); ++k)
            out.u[static_cast<size_t>(sub.to_global[k])] = fem_res.u[k];

        // DRM half-sweep on the complement with the fresh FEM trace.
        std::vector<DrmBc> bcs;
        bcs.reserve(loop.size());
        for (const detail::LoopEdge& e : loop) {
            if (e.marker == interface_marker) {
                bcs.push_back({BcKind::dirichlet, 0.5 * (out.u[static_cast<size_t>(e.a)] +
                                                         out.u[static_cast<size_t>(e.b)])});
            } else {
                const BoundaryCondition& bc = problem.bcs.at(e.marker);
                const Vec2 pa = detail::node_pos(mesh, e.a);
                const Vec2 pb = detail::node_pos(mesh, e.b);
                bcs.push_back({bc.kind, bc.value(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y))});
            }
        }
        drm_sol = drm_solve_system(drm_sys, bcs, drm_source);

        // New rim data and the sweep-to-sweep change it carries.
        double change = 0.0;
        for (int g : rim_internal) {
            const double v = drm_sol.u_internal[internal_index.at(g)];
            change = std::max(change, std::abs(v - rim_data.at(g)));
            rim_data[g] = v;
        }
        for (const auto& [g, segs] : rim_segments) {
            double acc = 0.0;
            for (size_t j : segs) acc += drm_sol.u_boundary[j];
            const double v = acc / static_cast<double>(segs.size());
            change = std::max(change, std::abs(v - rim_data.at(g)));
            rim_data[g] = v;
        }
        // DRM region owns the nodes outside the FEM patch.
        for (size_t k = 0; k < internal_ids.size(); ++k)
            if (!extended_nodes.count(internal_ids[k]))
                out.u[static_cast<size_t>(internal_ids[k])] = drm_sol.u_internal[k];

        out.trace_change.push_back(change);
        out.sweeps = sweep;
        if (observer) observer(sweep, out.u);
        if (change < config.coupling_tol) {
            out.converged = true;
            break;
        }
        // Stagnation: no improvement across five consecutive sweeps.
        const size_t n = out.trace_change.size();
        if (n >= 6 && out.trace_change[n - 1] >= out.trace_change[n - 6]) break;
    }

    out.fem_residual_norm = fem_res.final_residual_norm;
    if (!drm_sol.u_boundary.empty())
        out.drm_residual_norm = detail::drm_system_residual(drm_sys, drm_sol);
    double gap = 0.0;
    for (size_t k = 0; k < internal_ids.size(); ++k)
        if (extended_nodes.count(internal_ids[k]))
            gap = std::max(gap, std::abs(out.u[static_cast<size_t>(internal_ids[k])] -
                                         drm_sol.u_internal[k]));
    out.interface_gap = gap;
    return out;
}

} // namespace hdrm
