#pragma once

// Rectilinear 2D computational domains and their structured triangulations.
//
// A domain is a union of axis-aligned rectangles (the bounded part) plus
// semi-infinite strip ports that are truncated at a finite length when the
// domain is meshed. Every boundary edge carries exactly one tag; the tag
// decides the boundary condition downstream.
//
// Meshing is deterministic: identical inputs produce bit-identical node
// ordering. Each grid square is split along its main diagonal (lower-left to
// upper-right), which keeps meshes of swap-symmetric domains invariant under
// (x,y) -> (y,x). That exact symmetry is relied on by the eigenfunction
// symmetry checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tmcert/numerics.hpp"

namespace tmcert::geometry {

enum class EdgeTag {
    dirichlet,
    neumann,
    artificial,
    inner_conductor,
    outer_conductor,
    symmetry,
};

inline const char* to_string(EdgeTag t) {
    switch (t) {
        case EdgeTag::dirichlet: return "dirichlet";
        case EdgeTag::neumann: return "neumann";
        case EdgeTag::artificial: return "artificial";
        case EdgeTag::inner_conductor: return "inner_conductor";
        case EdgeTag::outer_conductor: return "outer_conductor";
        case EdgeTag::symmetry: return "symmetry";
    }
    return "?";
}

/// Axis-aligned rectangle, x0 < x1 and y0 < y1.
struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double min_side() const { return std::min(width(), height()); }

    void validate() const {
        if (!(x0 < x1 && y0 < y1))
            throw std::invalid_argument("Rect: requires x0 < x1 and y0 < y1");
    }
};

enum class PortDir { plus_x, minus_x, plus_y, minus_y };

/// Semi-infinite strip attached to the bounded part. `ax0..ay1` is the
/// attachment edge, an axis-aligned segment on the bounded-region boundary.
/// The strip is truncated at `truncation_length` measured from that edge;
/// the far face is tagged artificial, the side walls get `wall_tag`.
struct StripPort {
    double ax0 = 0, ay0 = 0, ax1 = 0, ay1 = 0;
    PortDir dir = PortDir::plus_x;
    double width = 0;
    double truncation_length = 0;
    EdgeTag wall_tag = EdgeTag::dirichlet;

    bool along_x() const { return dir == PortDir::plus_x || dir == PortDir::minus_x; }

    void validate() const {
        if (!(width > 0)) throw std::invalid_argument("StripPort: width must be > 0");
        if (!(truncation_length > 0))
            throw std::invalid_argument("StripPort: truncation length must be > 0");
        const bool vertical_edge = std::abs(ax0 - ax1) < 1e-14;
        if (along_x() != vertical_edge)
            throw std::invalid_argument("StripPort: attachment edge not transverse to direction");
    }

    /// Rectangle occupied by the truncated strip.
    Rect truncated_rect() const {
        const double T = truncation_length;
        switch (dir) {
            case PortDir::plus_x: return {ax0, std::min(ay0, ay1), ax0 + T, std::max(ay0, ay1)};
            case PortDir::minus_x: return {ax0 - T, std::min(ay0, ay1), ax0, std::max(ay0, ay1)};
            case PortDir::plus_y: return {std::min(ax0, ax1), ay0, std::max(ax0, ax1), ay0 + T};
            case PortDir::minus_y: return {std::min(ax0, ax1), ay0 - T, std::max(ax0, ax1), ay0};
        }
        throw std::logic_error("unreachable");
    }
};

/// Boundary segment with a tag. Segments are axis-aligned.
struct TaggedSegment {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    EdgeTag tag = EdgeTag::dirichlet;

    bool contains(double px, double py, double tol) const {
        const double lox = std::min(x0, x1) - tol, hix = std::max(x0, x1) + tol;
        const double loy = std::min(y0, y1) - tol, hiy = std::max(y0, y1) + tol;
        if (px < lox || px > hix || py < loy || py > hiy) return false;
        // axis aligned: distance to the supporting line
        if (std::abs(x0 - x1) < tol) return std::abs(px - x0) <= tol;
        return std::abs(py - y0) <= tol;
    }
};

struct RectilinearDomain2D {
    std::string name;
    std::vector<Rect> rects;              ///< bounded part
    std::vector<StripPort> ports;         ///< truncated when meshing
    std::vector<TaggedSegment> segments;  ///< tags for the bounded part's own boundary
    bool annular = false;                 ///< one rectangular hole
    bool simply_connected = true;

    void validate() const {
        for (const auto& r : rects) r.validate();
        for (const auto& p : ports) p.validate();
    }
};

/// Copy of `dom` with every port truncated at length `T`.
inline RectilinearDomain2D with_port_length(RectilinearDomain2D dom, double T) {
    if (!(T > 0)) throw std::invalid_argument("with_port_length: T must be > 0");
    for (auto& p : dom.ports) p.truncation_length = T;
    return dom;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace detail {
inline double param(const std::map<std::string, double>& p, const std::string& key,
                    double fallback, bool required = false) {
    auto it = p.find(key);
    if (it == p.end()) {
        if (required) throw std::invalid_argument("preset_domain: missing parameter '" + key + "'");
        return fallback;
    }
    return it->second;
}
}  // namespace detail

/// Canonical domains addressable by name. Dirichlet tags everywhere by
/// default; the annulus tags its conductors and half_guide_mixed tags the
/// symmetry line Dirichlet with Neumann elsewhere.
///
/// Presets and parameters:
///   rectangle        a, b                 single a x b rectangle, no ports
///   l_shape          T (default 4)        unit corner square, two width-1 ports
///   x_shape          T (default 4)        center square (-1/2,1/2)^2, four ports
///   square_annulus   a, b                 outer side a, concentric inner side b
///   half_guide_mixed a, b                 rectangle, Dirichlet at x=0, Neumann rest
inline RectilinearDomain2D preset_domain(const std::string& name,
                                         const std::map<std::string, double>& params = {}) {
    using detail::param;
    RectilinearDomain2D d;
    d.name = name;
    if (name == "rectangle") {
        const double a = param(params, "a", 0, true);
        const double b = param(params, "b", 0, true);
        if (!(a > 0 && b > 0)) throw std::invalid_argument("rectangle: a, b must be > 0");
        d.rects = {{0, 0, a, b}};
        d.segments = {
            {0, 0, a, 0, EdgeTag::dirichlet},
            {a, 0, a, b, EdgeTag::dirichlet},
            {0, b, a, b, EdgeTag::dirichlet},
            {0, 0, 0, b, EdgeTag::dirichlet},
        };
    } else if (name == "l_shape") {
        const double T = param(params, "T", 4.0);
        if (!(T > 0)) throw std::invalid_argument("l_shape: T must be > 0");
        d.rects = {{0, 0, 1, 1}};
        d.ports = {
            {1, 0, 1, 1, PortDir::plus_x, 1.0, T, EdgeTag::dirichlet},
            {0, 1, 1, 1, PortDir::plus_y, 1.0, T, EdgeTag::dirichlet},
        };
        d.segments = {
            {0, 0, 1, 0, EdgeTag::dirichlet},
            {0, 0, 0, 1, EdgeTag::dirichlet},
        };
    } else if (name == "x_shape") {
        const double T = param(params, "T", 4.0);
        if (!(T > 0)) throw std::invalid_argument("x_shape: T must be > 0");
        d.rects = {{-0.5, -0.5, 0.5, 0.5}};
        d.ports = {
            {0.5, -0.5, 0.5, 0.5, PortDir::plus_x, 1.0, T, EdgeTag::dirichlet},
            {-0.5, -0.5, -0.5, 0.5, PortDir::minus_x, 1.0, T, EdgeTag::dirichlet},
            {-0.5, 0.5, 0.5, 0.5, PortDir::plus_y, 1.0, T, EdgeTag::dirichlet},
            {-0.5, -0.5, 0.5, -0.5, PortDir::minus_y, 1.0, T, EdgeTag::dirichlet},
        };
        // the whole boundary belongs to the ports
    } else if (name == "square_annulus") {
        const double a = param(params, "a", 1.0);
        const double b = param(params, "b", 0.5);
        if (!(a > 0 && b > 0 && b < a))
            throw std::invalid_argument("square_annulus: requires 0 < b < a (strictly nested)");
        const double g = 0.5 * (a - b);  // gap width
        d.annular = true;
        d.simply_connected = false;
        d.rects = {
            {0, 0, g, a},          // left column
            {g + b, 0, a, a},      // right column
            {g, 0, g + b, g},      // bottom row
            {g, g + b, g + b, a},  // top row
        };
        d.segments = {
            {0, 0, a, 0, EdgeTag::outer_conductor},
            {a, 0, a, a, EdgeTag::outer_conductor},
            {0, a, a, a, EdgeTag::outer_conductor},
            {0, 0, 0, a, EdgeTag::outer_conductor},
            {g, g, g + b, g, EdgeTag::inner_conductor},
            {g + b, g, g + b, g + b, EdgeTag::inner_conductor},
            {g, g + b, g + b, g + b, EdgeTag::inner_conductor},
            {g, g, g, g + b, EdgeTag::inner_conductor},
        };
    } else if (name == "half_guide_mixed") {
        const double a = param(params, "a", 1.0);
        const double b = param(params, "b", 1.0);
        if (!(a > 0 && b > 0)) throw std::invalid_argument("half_guide_mixed: a, b must be > 0");
        d.rects = {{0, 0, a, b}};
        d.segments = {
            {0, 0, 0, b, EdgeTag::dirichlet},  // symmetry line
            {0, 0, a, 0, EdgeTag::neumann},
            {a, 0, a, b, EdgeTag::neumann},
            {0, b, a, b, EdgeTag::neumann},
        };
    } else {
        throw std::invalid_argument("preset_domain: unknown preset '" + name + "'");
    }
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// TriMesh
// ---------------------------------------------------------------------------

struct BoundaryEdge {
    int a = 0, b = 0;
    EdgeTag tag = EdgeTag::dirichlet;
};

struct TriMesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> tris;  ///< CCW
    std::vector<BoundaryEdge> boundary_edges;
    double h = 0;  ///< target element size, max diameter <= sqrt(2) h

    // lattice cell -> up to two triangle indices, for point location
    std::unordered_map<std::int64_t, std::array<int, 2>> cell_tris;

    double area(int t) const {
        const auto& tr = tris[t];
        const auto& p0 = nodes[tr[0]];
        const auto& p1 = nodes[tr[1]];
        const auto& p2 = nodes[tr[2]];
        return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
    }

    std::array<double, 2> centroid(int t) const {
        const auto& tr = tris[t];
        return {(nodes[tr[0]][0] + nodes[tr[1]][0] + nodes[tr[2]][0]) / 3.0,
                (nodes[tr[0]][1] + nodes[tr[1]][1] + nodes[tr[2]][1]) / 3.0};
    }

    static std::int64_t cell_key(std::int64_t ix, std::int64_t iy) {
        return ((ix + (1 << 28)) << 30) + (iy + (1 << 28));
    }

    /// Barycentric coordinates of (x,y) in triangle t.
    std::array<double, 3> barycentric(int t, double x, double y) const {
        const auto& tr = tris[t];
        const auto& p0 = nodes[tr[0]];
        const auto& p1 = nodes[tr[1]];
        const auto& p2 = nodes[tr[2]];
        const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        const double l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (y - p0[1])) / det;
        const double l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (x - p0[0]) * (p1[1] - p0[1])) / det;
        return {1.0 - l1 - l2, l1, l2};
    }

    /// Triangle containing (x,y), or -1. Points on shared edges resolve to a
    /// deterministic owner (lowest triangle index among candidates).
    int locate(double x, double y, double tol = 1e-9) const {
        const auto ixf = std::floor(x / h - 1e-12), iyf = std::floor(y / h - 1e-12);
        int best = -1;
        for (int dx = 0; dx <= 1; ++dx) {
            for (int dy = 0; dy <= 1; ++dy) {
                auto it = cell_tris.find(cell_key(static_cast<std::int64_t>(ixf) + dx,
                                                  static_cast<std::int64_t>(iyf) + dy));
                if (it == cell_tris.end()) continue;
                for (int t : it->second) {
                    if (t < 0) continue;
                    const auto l = barycentric(t, x, y);
                    if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol)
                        if (best < 0 || t < best) best = t;
                }
            }
        }
        return best;
    }
};

namespace detail {

struct NodeLattice {
    std::unordered_map<std::int64_t, int> index;
    std::vector<std::array<double, 2>>* nodes;
    double h;

    int get(std::int64_t ix, std::int64_t iy) {
        const auto key = TriMesh::cell_key(ix, iy);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        const int id = static_cast<int>(nodes->size());
        nodes->push_back({static_cast<double>(ix) * h, static_cast<double>(iy) * h});
        index.emplace(key, id);
        return id;
    }
};

inline std::int64_t snap(double c, double h, const char* what) {
    const double q = c / h;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-6)
        throw std::invalid_argument(std::string("triangulate: ") + what +
                                    " is not aligned with the grid size h");
    return static_cast<std::int64_t>(r);
}

}  // namespace detail

/// Structured conforming triangulation. Each constituent rectangle is split
/// into h-sized squares and each square into two triangles along the main
/// diagonal. Boundary edges inherit tags from the domain segments; port
/// walls and truncation faces are tagged from the port description.
inline TriMesh triangulate(const RectilinearDomain2D& dom, double h) {
    if (!(h > 0)) throw std::invalid_argument("triangulate: h must be > 0");
    dom.validate();

    std::vector<Rect> all_rects = dom.rects;
    std::vector<TaggedSegment> segs = dom.segments;
    for (const auto& p : dom.ports) {
        const Rect r = p.truncated_rect();
        all_rects.push_back(r);
        // side walls along the port axis, artificial face at the far end
        if (p.along_x()) {
            segs.push_back({r.x0, r.y0, r.x1, r.y0, p.wall_tag});
            segs.push_back({r.x0, r.y1, r.x1, r.y1, p.wall_tag});
            const double xa = (p.dir == PortDir::plus_x) ? r.x1 : r.x0;
            segs.push_back({xa, r.y0, xa, r.y1, EdgeTag::artificial});
        } else {
            segs.push_back({r.x0, r.y0, r.x0, r.y1, p.wall_tag});
            segs.push_back({r.x1, r.y0, r.x1, r.y1, p.wall_tag});
            const double ya = (p.dir == PortDir::plus_y) ? r.y1 : r.y0;
            segs.push_back({r.x0, ya, r.x1, ya, EdgeTag::artificial});
        }
    }
    if (all_rects.empty()) throw std::invalid_argument("triangulate: empty domain");

    double min_feature = std::numeric_limits<double>::infinity();
    for (const auto& r : all_rects) min_feature = std::min(min_feature, r.min_side());
    if (h > min_feature / 2 + 1e-12)
        throw std::invalid_argument("triangulate: h too large relative to geometry (need h <= min feature / 2)");

    TriMesh mesh;
    mesh.h = h;
    detail::NodeLattice lattice{{}, &mesh.nodes, h};
    std::unordered_map<std::int64_t, int> claimed;  // cell -> first triangle index

    for (const auto& r : all_rects) {
        const auto i0 = detail::snap(r.x0, h, "rect x0"), i1 = detail::snap(r.x1, h, "rect x1");
        const auto j0 = detail::snap(r.y0, h, "rect y0"), j1 = detail::snap(r.y1, h, "rect y1");
        for (auto j = j0; j < j1; ++j) {
            for (auto i = i0; i < i1; ++i) {
                const auto key = TriMesh::cell_key(i, j);
                if (!claimed.emplace(key, static_cast<int>(mesh.tris.size())).second)
                    throw std::invalid_argument("triangulate: rectangles overlap");
                const int n00 = lattice.get(i, j);
                const int n10 = lattice.get(i + 1, j);
                const int n01 = lattice.get(i, j + 1);
                const int n11 = lattice.get(i + 1, j + 1);
                const int t0 = static_cast<int>(mesh.tris.size());
                mesh.tris.push_back({n00, n10, n11});
                mesh.tris.push_back({n00, n11, n01});
                mesh.cell_tris.emplace(key, std::array<int, 2>{t0, t0 + 1});
            }
        }
    }

    // connectivity of the cell graph
    {
        std::unordered_map<std::int64_t, char> seen;
        std::vector<std::int64_t> stack{claimed.begin()->first};
        seen[stack.back()] = 1;
        while (!stack.empty()) {
            const auto key = stack.back();
            stack.pop_back();
            const auto iy = (key & ((1ll << 30) - 1)) - (1 << 28);
            const auto ix = (key >> 30) - (1 << 28);
            const std::int64_t nb[4] = {TriMesh::cell_key(ix + 1, iy), TriMesh::cell_key(ix - 1, iy),
                                        TriMesh::cell_key(ix, iy + 1), TriMesh::cell_key(ix, iy - 1)};
            for (auto k : nb)
                if (claimed.count(k) && !seen.count(k)) {
                    seen[k] = 1;
                    stack.push_back(k);
                }
        }
        if (seen.size() != claimed.size())
            throw std::invalid_argument("triangulate: domain is not connected");
    }

    // boundary edges: undirected edges used by exactly one triangle
    std::unordered_map<std::int64_t, int> edge_count;
    auto ekey = [](int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    };
    for (const auto& t : mesh.tris)
        for (int e = 0; e < 3; ++e) ++edge_count[ekey(t[e], t[(e + 1) % 3])];

    const double tol = 1e-9 * std::max(1.0, min_feature);
    for (const auto& t : mesh.tris) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            if (edge_count[ekey(a, b)] != 1) continue;
            const double mx = 0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]);
            const double my = 0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1]);
            const TaggedSegment* match = nullptr;
            for (const auto& s : segs)
                if (s.contains(mx, my, tol)) { match = &s; break; }
            if (!match)
                throw std::invalid_argument("triangulate: untagged boundary edge near (" +
                                            format_double(mx) + ", " + format_double(my) + ")");
            mesh.boundary_edges.push_back({a, b, match->tag});
        }
    }
    return mesh;
}

/// Uniform refinement: every triangle splits into four, boundary edges into
/// two. Tags are preserved and h halves.
inline TriMesh refine(const TriMesh& mesh) {
    TriMesh out;
    out.h = mesh.h / 2;
    out.nodes = mesh.nodes;
    std::unordered_map<std::int64_t, int> midpoint;
    auto mid = [&](int a, int b) {
        auto key = (static_cast<std::int64_t>(std::min(a, b)) << 32) |
                   static_cast<std::uint32_t>(std::max(a, b));
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back({0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]),
                             0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1])});
        midpoint.emplace(key, id);
        return id;
    };
    out.tris.reserve(mesh.tris.size() * 4);
    for (const auto& t : mesh.tris) {
        const int a = t[0], b = t[1], c = t[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.tris.push_back({a, ab, ca});
        out.tris.push_back({ab, b, bc});
        out.tris.push_back({ca, bc, c});
        out.tris.push_back({ab, bc, ca});
    }
    out.boundary_edges.reserve(mesh.boundary_edges.size() * 2);
    for (const auto& e : mesh.boundary_edges) {
        const int m = mid(e.a, e.b);
        out.boundary_edges.push_back({e.a, m, e.tag});
        out.boundary_edges.push_back({m, e.b, e.tag});
    }
    // rebuild the locator lattice at the finer h
    for (std::size_t t = 0; t < out.tris.size(); ++t) {
        const auto c = out.centroid(static_cast<int>(t));
        const auto ix = static_cast<std::int64_t>(std::floor(c[0] / out.h));
        const auto iy = static_cast<std::int64_t>(std::floor(c[1] / out.h));
        auto& slot = out.cell_tris[TriMesh::cell_key(ix, iy)];
        if (slot[0] == 0 && slot[1] == 0) slot = {-1, -1};
        if (slot[0] < 0)
            slot[0] = static_cast<int>(t);
        else
            slot[1] = static_cast<int>(t);
    }
    return out;
}

struct MeshStats {
    double min_area = 0;
    double max_diameter = 0;
    long euler_char = 0;
    std::size_t n_nodes = 0, n_edges = 0, n_tris = 0, n_boundary = 0;
};

/// Checks every TriMesh invariant: positive areas, conformity (each edge in
/// one or two triangles, boundary edges in exactly one), full tag coverage
/// and the Euler relation. Throws on violation.
inline MeshStats validate_mesh(const TriMesh& mesh, long expected_euler = 1) {
    MeshStats st;
    st.n_nodes = mesh.nodes.size();
    st.n_tris = mesh.tris.size();
    st.min_area = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const double a = mesh.area(static_cast<int>(t));
        if (!(a > 0)) throw std::logic_error("validate_mesh: non-positive triangle area");
        st.min_area = std::min(st.min_area, a);
        const auto& tr = mesh.tris[t];
        for (int e = 0; e < 3; ++e) {
            const auto& p = mesh.nodes[tr[e]];
            const auto& q = mesh.nodes[tr[(e + 1) % 3]];
            st.max_diameter = std::max(st.max_diameter, std::hypot(p[0] - q[0], p[1] - q[1]));
        }
    }
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : mesh.tris)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edges[{a, b}];
        }
    std::size_t boundary_count = 0;
    for (const auto& [k, c] : edges) {
        if (c > 2) throw std::logic_error("validate_mesh: edge shared by more than two triangles");
        if (c == 1) ++boundary_count;
    }
    st.n_edges = edges.size();
    st.n_boundary = boundary_count;
    if (boundary_count != mesh.boundary_edges.size())
        throw std::logic_error("validate_mesh: boundary edge list does not match mesh topology");
    for (const auto& e : mesh.boundary_edges) {
        auto key = std::make_pair(std::min(e.a, e.b), std::max(e.a, e.b));
        auto it = edges.find(key);
        if (it == edges.end() || it->second != 1)
            throw std::logic_error("validate_mesh: tagged edge is not a boundary edge");
    }
    st.euler_char = static_cast<long>(st.n_nodes) - static_cast<long>(st.n_edges) +
                    static_cast<long>(st.n_tris);
    if (st.euler_char != expected_euler)
        throw std::logic_error("validate_mesh: Euler characteristic mismatch");
    return st;
}

}  // namespace tmcert::geometry
