#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdrm/errors.hpp"

namespace hdrm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Node {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
};

/// Triangle with counter-clockwise node ordering. `parent` refers to the
/// element id in the mesh this element was refined from (-1 for roots).
struct Element {
    int id = 0;
    std::array<int, 3> node_ids{};
    int generation = 0;
    int parent = -1;
};

struct BoundaryEdge {
    std::array<int, 2> node_ids{};
    int element_id = -1;
    int marker = 0;
};

namespace detail {
inline std::pair<int, int> edge_key(int a, int b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}
} // namespace detail

/// Conforming triangulation of a 2D polygonal domain. Immutable by
/// convention: refinement returns a new mesh.
class Mesh {
public:
    std::vector<Node> nodes;         // nodes[i].id == i
    std::vector<Element> elements;   // elements[i].id == i
    std::vector<BoundaryEdge> boundary_edges;
    int generation = 0;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }

    const Element& element(int id) const {
        if (id < 0 || id >= element_count())
            throw Error(ErrorKind::not_found,
                        "element id " + std::to_string(id) + " not in mesh");
        return elements[static_cast<size_t>(id)];
    }

    std::array<Vec2, 3> element_coords(int id) const {
        const Element& e = element(id);
        std::array<Vec2, 3> p;
        for (int k = 0; k < 3; ++k) {
            const Node& n = nodes[static_cast<size_t>(e.node_ids[static_cast<size_t>(k)])];
            p[static_cast<size_t>(k)] = {n.x, n.y};
        }
        return p;
    }

    /// Twice the signed area; positive for counter-clockwise node order.
    double element_signed_area2(int id) const {
        auto p = element_coords(id);
        return (p[1].x - p[0].x) * (p[2].y - p[0].y) -
               (p[2].x - p[0].x) * (p[1].y - p[0].y);
    }

    double element_area(int id) const { return 0.5 * element_signed_area2(id); }

    double total_area() const {
        double a = 0.0;
        for (const Element& e : elements) a += element_area(e.id);
        return a;
    }

    double edge_length(const BoundaryEdge& e) const {
        const Node& a = nodes[static_cast<size_t>(e.node_ids[0])];
        const Node& b = nodes[static_cast<size_t>(e.node_ids[1])];
        return std::hypot(b.x - a.x, b.y - a.y);
    }

    /// No hanging nodes: every element edge is shared by exactly two
    /// elements or listed as a boundary edge.
    bool is_conforming() const {
        std::map<std::pair<int, int>, int> count;
        for (const Element& e : elements)
            for (int k = 0; k < 3; ++k)
                count[detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                       e.node_ids[static_cast<size_t>((k + 1) % 3)])]++;
        std::set<std::pair<int, int>> boundary;
        for (const BoundaryEdge& b : boundary_edges)
            boundary.insert(detail::edge_key(b.node_ids[0], b.node_ids[1]));
        for (const auto& [key, c] : count) {
            if (c == 2) continue;
            if (c == 1 && boundary.count(key)) continue;
            return false;
        }
        return true;
    }

    /// Throws on any violated mesh invariant.
    void validate() const {
        for (size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].id != static_cast<int>(i))
                throw Error(ErrorKind::invalid_geometry, "node ids not contiguous");
            if (!std::isfinite(nodes[i].x) || !std::isfinite(nodes[i].y))
                throw Error(ErrorKind::invalid_geometry, "non-finite node coordinate");
        }
        for (size_t i = 0; i < elements.size(); ++i) {
            const Element& e = elements[i];
            if (e.id != static_cast<int>(i))
                throw Error(ErrorKind::invalid_geometry, "element ids not contiguous");
            if (e.node_ids[0] == e.node_ids[1] || e.node_ids[1] == e.node_ids[2] ||
                e.node_ids[0] == e.node_ids[2])
                throw Error(ErrorKind::invalid_geometry, "degenerate element nodes");
            for (int nid : e.node_ids)
                if (nid < 0 || nid >= node_count())
                    throw Error(ErrorKind::invalid_geometry, "element node out of range");
            if (element_signed_area2(e.id) <= 0.0)
                throw Error(ErrorKind::invalid_geometry,
                            "element " + std::to_string(e.id) + " not counter-clockwise");
        }
        std::map<std::pair<int, int>, int> edge_owner;
        for (const Element& e : elements)
            for (int k = 0; k < 3; ++k)
                edge_owner[detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                            e.node_ids[static_cast<size_t>((k + 1) % 3)])] = e.id;
        for (const BoundaryEdge& b : boundary_edges) {
            auto it = edge_owner.find(detail::edge_key(b.node_ids[0], b.node_ids[1]));
            if (it == edge_owner.end())
                throw Error(ErrorKind::invalid_geometry, "boundary edge not part of any element");
            if (b.element_id < 0 || b.element_id >= element_count())
                throw Error(ErrorKind::invalid_geometry, "boundary edge owner out of range");
        }
        if (!is_conforming())
            throw Error(ErrorKind::invalid_geometry, "mesh has hanging nodes");
    }
};

/// Structured triangulation of an axis-aligned rectangle. `corners` is
/// {x0, y0, x1, y1}. Boundary markers: bottom 0, right 1, top 2, left 3.
inline Mesh build_rect_mesh(int nx, int ny, std::array<double, 4> corners) {
    if (nx < 1 || ny < 1)
        throw Error(ErrorKind::invalid_geometry, "build_rect_mesh: nx, ny must be >= 1");
    const double x0 = corners[0], y0 = corners[1], x1 = corners[2], y1 = corners[3];
    if (!(x1 > x0) || !(y1 > y0))
        throw Error(ErrorKind::invalid_geometry, "build_rect_mesh: degenerate rectangle");

    Mesh m;
    m.nodes.reserve(static_cast<size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.push_back({j * (nx + 1) + i,
                               x0 + (x1 - x0) * i / nx,
                               y0 + (y1 - y0) * j / ny});

    auto nid = [nx](int i, int j) { return j * (nx + 1) + i; };
    int eid = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int n00 = nid(i, j), n10 = nid(i + 1, j);
            int n01 = nid(i, j + 1), n11 = nid(i + 1, j + 1);
            m.elements.push_back({eid++, {n00, n10, n11}, 0, -1});
            m.elements.push_back({eid++, {n00, n11, n01}, 0, -1});
        }

    // Boundary edges ordered counter-clockwise around the rectangle.
    std::map<std::pair<int, int>, int> owner;
    for (const Element& e : m.elements)
        for (int k = 0; k < 3; ++k)
            owner[detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                   e.node_ids[static_cast<size_t>((k + 1) % 3)])] = e.id;
    auto add_edge = [&](int a, int b, int marker) {
        m.boundary_edges.push_back({{a, b}, owner.at(detail::edge_key(a, b)), marker});
    };
    for (int i = 0; i < nx; ++i) add_edge(nid(i, 0), nid(i + 1, 0), 0);
    for (int j = 0; j < ny; ++j) add_edge(nid(nx, j), nid(nx, j + 1), 1);
    for (int i = nx; i > 0; --i) add_edge(nid(i, ny), nid(i - 1, ny), 2);
    for (int j = ny; j > 0; --j) add_edge(nid(0, j), nid(0, j - 1), 3);
    return m;
}

/// Red (edge-midpoint) subdivision of the marked elements. Conformity is
/// restored by closure: neighbors acquiring two or more hanging midpoints
/// are refined red as well (iterated to a fixed point), a single hanging
/// midpoint is resolved by a green bisection. Surviving elements come
/// first in the new numbering, in ascending old id.
inline Mesh refine_elements(const Mesh& mesh, const std::set<int>& marked) {
    for (int id : marked)
        if (id < 0 || id >= mesh.element_count())
            throw Error(ErrorKind::not_found,
                        "refine_elements: unknown element id " + std::to_string(id));
    if (marked.empty()) return mesh;

    std::set<int> red = marked;
    for (;;) {
        std::set<std::pair<int, int>> split;
        for (int id : red) {
            const Element& e = mesh.elements[static_cast<size_t>(id)];
            for (int k = 0; k < 3; ++k)
                split.insert(detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                              e.node_ids[static_cast<size_t>((k + 1) % 3)]));
        }
        bool grew = false;
        for (const Element& e : mesh.elements) {
            if (red.count(e.id)) continue;
            int hanging = 0;
            for (int k = 0; k < 3; ++k)
                hanging += split.count(detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                                        e.node_ids[static_cast<size_t>((k + 1) % 3)]));
            if (hanging >= 2) {
                red.insert(e.id);
                grew = true;
            }
        }
        if (!grew) break;
    }

    Mesh out;
    out.nodes = mesh.nodes;
    out.generation = mesh.generation + 1;

    // Midpoint nodes for every edge of a red element, in deterministic order.
    std::set<std::pair<int, int>> split_edges;
    for (int id : red) {
        const Element& e = mesh.elements[static_cast<size_t>(id)];
        for (int k = 0; k < 3; ++k)
            split_edges.insert(detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                                e.node_ids[static_cast<size_t>((k + 1) % 3)]));
    }
    std::map<std::pair<int, int>, int> midpoint;
    for (const auto& [a, b] : split_edges) {
        const Node& na = mesh.nodes[static_cast<size_t>(a)];
        const Node& nb = mesh.nodes[static_cast<size_t>(b)];
        int id = out.node_count();
        out.nodes.push_back({id, 0.5 * (na.x + nb.x), 0.5 * (na.y + nb.y)});
        midpoint[{a, b}] = id;
    }
    auto mid_of = [&](int a, int b) -> int {
        auto it = midpoint.find(detail::edge_key(a, b));
        return it == midpoint.end() ? -1 : it->second;
    };

    std::vector<Element> survivors, children;
    for (const Element& e : mesh.elements) {
        const int v0 = e.node_ids[0], v1 = e.node_ids[1], v2 = e.node_ids[2];
        if (red.count(e.id)) {
            int m01 = mid_of(v0, v1), m12 = mid_of(v1, v2), m20 = mid_of(v2, v0);
            children.push_back({0, {v0, m01, m20}, e.generation + 1, e.id});
            children.push_back({0, {m01, v1, m12}, e.generation + 1, e.id});
            children.push_back({0, {m20, m12, v2}, e.generation + 1, e.id});
            children.push_back({0, {m01, m12, m20}, e.generation + 1, e.id});
            continue;
        }
        int m01 = mid_of(v0, v1), m12 = mid_of(v1, v2), m20 = mid_of(v2, v0);
        int hanging = (m01 >= 0) + (m12 >= 0) + (m20 >= 0);
        if (hanging == 0) {
            survivors.push_back(e);
        } else {
            // Exactly one hanging midpoint after closure: green bisection.
            if (m01 >= 0) {
                children.push_back({0, {v0, m01, v2}, e.generation + 1, e.id});
                children.push_back({0, {m01, v1, v2}, e.generation + 1, e.id});
            } else if (m12 >= 0) {
                children.push_back({0, {v1, m12, v0}, e.generation + 1, e.id});
                children.push_back({0, {m12, v2, v0}, e.generation + 1, e.id});
            } else {
                children.push_back({0, {v2, m20, v1}, e.generation + 1, e.id});
                children.push_back({0, {m20, v0, v1}, e.generation + 1, e.id});
            }
        }
    }
    out.elements.reserve(survivors.size() + children.size());
    for (Element e : survivors) {
        e.id = out.element_count();
        out.elements.push_back(e);
    }
    for (Element e : children) {
        e.id = out.element_count();
        out.elements.push_back(e);
    }

    std::map<std::pair<int, int>, int> owner;
    for (const Element& e : out.elements)
        for (int k = 0; k < 3; ++k)
            owner[detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                   e.node_ids[static_cast<size_t>((k + 1) % 3)])] = e.id;
    for (const BoundaryEdge& b : mesh.boundary_edges) {
        int m = mid_of(b.node_ids[0], b.node_ids[1]);
        if (m < 0) {
            out.boundary_edges.push_back(
                {b.node_ids, owner.at(detail::edge_key(b.node_ids[0], b.node_ids[1])), b.marker});
        } else {
            out.boundary_edges.push_back(
                {{b.node_ids[0], m}, owner.at(detail::edge_key(b.node_ids[0], m)), b.marker});
            out.boundary_edges.push_back(
                {{m, b.node_ids[1]}, owner.at(detail::edge_key(m, b.node_ids[1])), b.marker});
        }
    }
    return out;
}

/// Constant gradient of the P1 interpolant of nodal values `u` on one element.
inline Vec2 element_gradient(const Mesh& mesh, const std::vector<double>& u, int element_id) {
    if (u.size() != mesh.nodes.size())
        throw Error(ErrorKind::dimension_mismatch,
                    "element_gradient: field has " + std::to_string(u.size()) +
                        " entries for " + std::to_string(mesh.nodes.size()) + " nodes");
    const Element& e = mesh.element(element_id);
    auto p = mesh.element_coords(element_id);
    const double det = mesh.element_signed_area2(element_id);
    const double b[3] = {p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y};
    const double c[3] = {p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x};
    Vec2 g;
    for (int k = 0; k < 3; ++k) {
        const double uk = u[static_cast<size_t>(e.node_ids[static_cast<size_t>(k)])];
        g.x += b[k] * uk / det;
        g.y += c[k] * uk / det;
    }
    return g;
}

/// Line-oriented text format:
///   nodes N elements M edges B
///   id x y                (N lines)
///   id n0 n1 n2 gen       (M lines)
///   n0 n1 marker          (B lines)
inline void write_mesh(const Mesh& mesh, std::ostream& os) {
    os << "nodes " << mesh.node_count() << " elements " << mesh.element_count()
       << " edges " << mesh.boundary_edges.size() << "\n";
    char buf[96];
    for (const Node& n : mesh.nodes) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", n.id, n.x, n.y);
        os << buf;
    }
    for (const Element& e : mesh.elements)
        os << e.id << ' ' << e.node_ids[0] << ' ' << e.node_ids[1] << ' '
           << e.node_ids[2] << ' ' << e.generation << "\n";
    for (const BoundaryEdge& b : mesh.boundary_edges)
        os << b.node_ids[0] << ' ' << b.node_ids[1] << ' ' << b.marker << "\n";
}

inline Mesh read_mesh(std::istream& is) {
    std::string kw_nodes, kw_elements, kw_edges;
    int nn = 0, ne = 0, nb = 0;
    if (!(is >> kw_nodes >> nn >> kw_elements >> ne >> kw_edges >> nb) ||
        kw_nodes != "nodes" || kw_elements != "elements" || kw_edges != "edges")
        throw Error(ErrorKind::io, "read_mesh: malformed header");
    Mesh m;
    m.nodes.resize(static_cast<size_t>(nn));
    for (int i = 0; i < nn; ++i) {
        Node n;
        if (!(is >> n.id >> n.x >> n.y))
            throw Error(ErrorKind::io, "read_mesh: bad node line");
        if (n.id < 0 || n.id >= nn)
            throw Error(ErrorKind::io, "read_mesh: node id out of range");
        m.nodes[static_cast<size_t>(n.id)] = n;
    }
    m.elements.resize(static_cast<size_t>(ne));
    for (int i = 0; i < ne; ++i) {
        Element e;
        if (!(is >> e.id >> e.node_ids[0] >> e.node_ids[1] >> e.node_ids[2] >> e.generation))
            throw Error(ErrorKind::io, "read_mesh: bad element line");
        if (e.id < 0 || e.id >= ne)
            throw Error(ErrorKind::io, "read_mesh: element id out of range");
        m.elements[static_cast<size_t>(e.id)] = e;
        m.generation = std::max(m.generation, e.generation);
    }
    std::map<std::pair<int, int>, int> owner;
    for (const Element& e : m.elements)
        for (int k = 0; k < 3; ++k)
            owner[detail::edge_key(e.node_ids[static_cast<size_t>(k)],
                                   e.node_ids[static_cast<size_t>((k + 1) % 3)])] = e.id;
    for (int i = 0; i < nb; ++i) {
        BoundaryEdge b;
        if (!(is >> b.node_ids[0] >> b.node_ids[1] >> b.marker))
            throw Error(ErrorKind::io, "read_mesh: bad edge line");
        auto it = owner.find(detail::edge_key(b.node_ids[0], b.node_ids[1]));
        if (it == owner.end())
            throw Error(ErrorKind::io, "read_mesh: boundary edge not in any element");
        b.element_id = it->second;
        m.boundary_edges.push_back(b);
    }
    return m;
}

} // namespace hdrm
