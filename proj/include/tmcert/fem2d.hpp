#pragma once

// P1 finite elements on a TriMesh: stiffness and mass assembly with boundary
// conditions applied by tag, exact element integrals, quadrature and
// per-element gradients.
//
// Stiffness uses the constant P1 gradients, mass is the exact (consistent)
// 3x3 element matrix. Dirichlet rows and columns are eliminated so the
// returned pencil lives on the free dofs only. Assembly is serial and
// triplet order is sorted before merging, so matrices are reproducible.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "tmcert/geometry.hpp"
#include "tmcert/numerics.hpp"

namespace tmcert::fem2d {

using geometry::EdgeTag;
using geometry::TriMesh;

/// Node-to-dof map after Dirichlet elimination. Constrained nodes carry
/// dof index -1 and homogeneous value 0 in the eigenproblem setting.
struct DofMap {
    std::vector<int> node_to_dof;  ///< -1 for constrained nodes
    std::vector<int> constrained;
    int n_free = 0;
};

/// Symmetric sparse matrix in coordinate format, lower triangle only
/// (row >= col), entries sorted and merged.
struct SymSparse {
    int n = 0;
    struct Entry {
        int r, c;
        double v;
    };
    std::vector<Entry> entries;

    Eigen::SparseMatrix<double> to_sparse() const {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(entries.size());
        for (const auto& e : entries) trips.emplace_back(e.r, e.c, e.v);
        Eigen::SparseMatrix<double> m(n, n);
        m.setFromTriplets(trips.begin(), trips.end());
        return m;  // lower triangle; use selfadjointView for products
    }

    double trace() const {
        double t = 0;
        for (const auto& e : entries)
            if (e.r == e.c) t += e.v;
        return t;
    }
};

enum class BcKind { dirichlet, neumann, mixed_by_tag };
enum class Condition { dirichlet, neumann };

struct BcSpec {
    BcKind kind = BcKind::dirichlet;
    std::map<EdgeTag, Condition> by_tag;  ///< required for mixed_by_tag

    static BcSpec all_dirichlet() { return {BcKind::dirichlet, {}}; }
    static BcSpec all_neumann() { return {BcKind::neumann, {}}; }
    static BcSpec mixed(std::map<EdgeTag, Condition> m) { return {BcKind::mixed_by_tag, std::move(m)}; }

    const char* name() const {
        switch (kind) {
            case BcKind::dirichlet: return "dirichlet";
            case BcKind::neumann: return "neumann";
            case BcKind::mixed_by_tag: return "mixed";
        }
        return "?";
    }
};

/// Piecewise-linear function given by its nodal values on all mesh nodes.
struct FEFunction {
    const TriMesh* mesh = nullptr;
    std::vector<double> values;

    double eval(double x, double y) const {
        const int t = mesh->locate(x, y);
        if (t < 0) throw std::domain_error("FEFunction::eval: point outside mesh");
        const auto l = mesh->barycentric(t, x, y);
        const auto& tr = mesh->tris[t];
        return l[0] * values[tr[0]] + l[1] * values[tr[1]] + l[2] * values[tr[2]];
    }

    Eigen::Vector2d grad_on_tri(int t) const;

    Eigen::Vector2d grad_at(double x, double y) const {
        const int t = mesh->locate(x, y);
        if (t < 0) throw std::domain_error("FEFunction::grad_at: point outside mesh");
        return grad_on_tri(t);
    }
};

namespace detail {

/// Gradients of the three P1 basis functions on triangle t and its area.
inline double p1_gradients(const TriMesh& mesh, int t, Eigen::Vector2d g[3]) {
    const auto& tr = mesh.tris[t];
    const auto& p0 = mesh.nodes[tr[0]];
    const auto& p1 = mesh.nodes[tr[1]];
    const auto& p2 = mesh.nodes[tr[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    g[0] = Eigen::Vector2d(p1[1] - p2[1], p2[0] - p1[0]) / det;
    g[1] = Eigen::Vector2d(p2[1] - p0[1], p0[0] - p2[0]) / det;
    g[2] = Eigen::Vector2d(p0[1] - p1[1], p1[0] - p0[0]) / det;
    return 0.5 * det;
}

inline void sort_merge(std::vector<SymSparse::Entry>& es) {
    std::sort(es.begin(), es.end(), [](const auto& a, const auto& b) {
        return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    std::size_t w = 0;
    for (std::size_t i = 0; i < es.size(); ++i) {
        if (w > 0 && es[w - 1].r == es[i].r && es[w - 1].c == es[i].c)
            es[w - 1].v += es[i].v;
        else
            es[w++] = es[i];
    }
    es.resize(w);
}

}  // namespace detail

inline Eigen::Vector2d FEFunction::grad_on_tri(int t) const {
    Eigen::Vector2d g[3];
    detail::p1_gradients(*mesh, t, g);
    const auto& tr = mesh->tris[t];
    return values[tr[0]] * g[0] + values[tr[1]] * g[1] + values[tr[2]] * g[2];
}

/// Nodes constrained by the boundary-condition choice.
inline std::vector<bool> dirichlet_nodes(const TriMesh& mesh, const BcSpec& bc) {
    std::vector<bool> fixed(mesh.nodes.size(), false);
    if (bc.kind == BcKind::neumann) return fixed;
    for (const auto& e : mesh.boundary_edges) {
        bool dir;
        if (bc.kind == BcKind::dirichlet) {
            dir = true;
        } else {
            auto it = bc.by_tag.find(e.tag);
            if (it == bc.by_tag.end())
                throw std::invalid_argument(std::string("assemble: no condition mapped for tag ") +
                                            geometry::to_string(e.tag));
            dir = (it->second == Condition::dirichlet);
        }
        if (dir) fixed[e.a] = fixed[e.b] = true;
    }
    return fixed;
}

struct AssembledSystem {
    SymSparse K;  ///< stiffness, positive semidefinite
    SymSparse M;  ///< mass, positive definite on free dofs
    DofMap dofs;
};

/// Assemble the P1 stiffness/mass pencil with the requested boundary
/// conditions eliminated.
inline AssembledSystem assemble(const TriMesh& mesh, const BcSpec& bc) {
    const auto fixed = dirichlet_nodes(mesh, bc);
    DofMap dofs;
    dofs.node_to_dof.assign(mesh.nodes.size(), -1);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        if (fixed[i])
            dofs.constrained.push_back(static_cast<int>(i));
        else
            dofs.node_to_dof[i] = dofs.n_free++;
    }
    if (dofs.n_free == 0) throw std::invalid_argument("assemble: empty free-dof set");

    SymSparse K, M;
    K.n = M.n = dofs.n_free;
    K.entries.reserve(mesh.tris.size() * 6);
    M.entries.reserve(mesh.tris.size() * 6);
    Eigen::Vector2d g[3];
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const double area = detail::p1_gradients(mesh, static_cast<int>(t), g);
        const auto& tr = mesh.tris[t];
        for (int i = 0; i < 3; ++i) {
            const int di = dofs.node_to_dof[tr[i]];
            if (di < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const int dj = dofs.node_to_dof[tr[j]];
                if (dj < 0 || dj > di) continue;  // lower triangle
                K.entries.push_back({di, dj, area * g[i].dot(g[j])});
                M.entries.push_back({di, dj, area / 12.0 * (i == j ? 2.0 : 1.0)});
            }
        }
    }
    detail::sort_merge(K.entries);
    detail::sort_merge(M.entries);
    return {std::move(K), std::move(M), std::move(dofs)};
}

/// Composite midpoint (centroid) quadrature, deterministic element order with
/// compensated summation. Exact for piecewise-linear integrands.
inline double integrate(const TriMesh& mesh, const std::function<double(double, double)>& f) {
    NeumaierSum s;
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const auto c = mesh.centroid(static_cast<int>(t));
        const double v = f(c[0], c[1]);
        if (!std::isfinite(v)) throw std::domain_error("integrate: non-finite sample");
        s.add(mesh.area(static_cast<int>(t)) * v);
    }
    return s.value();
}

/// Exact P1 gradient per element.
inline std::vector<Eigen::Vector2d> gradient(const FEFunction& u) {
    std::vector<Eigen::Vector2d> out(u.mesh->tris.size());
    for (std::size_t t = 0; t < u.mesh->tris.size(); ++t)
        out[t] = u.grad_on_tri(static_cast<int>(t));
    return out;
}

/// Solve the Laplace problem with Dirichlet data prescribed per tag (natural
/// Neumann on any untagged part). Used for the capacitor potential.
inline FEFunction solve_laplace_dirichlet(const TriMesh& mesh,
                                          const std::map<EdgeTag, double>& boundary_values) {
    std::vector<bool> fixed(mesh.nodes.size(), false);
    std::vector<double> value(mesh.nodes.size(), 0.0);
    bool any = false;
    for (const auto& e : mesh.boundary_edges) {
        auto it = boundary_values.find(e.tag);
        if (it == boundary_values.end()) continue;
        fixed[e.a] = fixed[e.b] = true;
        value[e.a] = value[e.b] = it->second;
        any = true;
    }
    if (!any) throw std::invalid_argument("solve_laplace_dirichlet: no tagged boundary present");

    std::vector<int> dof(mesh.nodes.size(), -1);
    int nf = 0;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        if (!fixed[i]) dof[i] = nf++;
    if (nf == 0) {
        FEFunction u{&mesh, value};
        return u;
    }

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    Eigen::Vector2d g[3];
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const double area = detail::p1_gradients(mesh, static_cast<int>(t), g);
        const auto& tr = mesh.tris[t];
        for (int i = 0; i < 3; ++i) {
            const int di = dof[tr[i]];
            if (di < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const double kij = area * g[i].dot(g[j]);
                const int dj = dof[tr[j]];
                if (dj >= 0)
                    trips.emplace_back(di, dj, kij);
                else
                    rhs[di] -= kij * value[tr[j]];
            }
        }
    }
    Eigen::SparseMatrix<double> A(nf, nf);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("solve_laplace_dirichlet: factorization failed");
    const Eigen::VectorXd x = solver.solve(rhs);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        if (dof[i] >= 0) value[i] = x[dof[i]];
    return FEFunction{&mesh, std::move(value)};
}

// --- exact elementwise integrals of FE functions --------------------------

/// Integral of u^2 over the triangles whose centroid satisfies `inside`
/// (pass nullptr for the whole mesh). Exact for P1.
inline double integral_u_sq(const FEFunction& u,
                            const std::function<bool(double, double)>& inside = nullptr) {
    NeumaierSum s;
    const auto& mesh = *u.mesh;
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        if (inside) {
            const auto c = mesh.centroid(static_cast<int>(t));
            if (!inside(c[0], c[1])) continue;
        }
        const auto& tr = mesh.tris[t];
        const double a = u.values[tr[0]], b = u.values[tr[1]], c2 = u.values[tr[2]];
        s.add(mesh.area(static_cast<int>(t)) / 6.0 *
              (a * a + b * b + c2 * c2 + a * b + a * c2 + b * c2));
    }
    return s.value();
}

/// Integral of |grad u|^2 over the selected triangles. Exact for P1.
inline double integral_grad_sq(const FEFunction& u,
                               const std::function<bool(double, double)>& inside = nullptr) {
    NeumaierSum s;
    const auto& mesh = *u.mesh;
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        if (inside) {
            const auto c = mesh.centroid(static_cast<int>(t));
            if (!inside(c[0], c[1])) continue;
        }
        const auto g = u.grad_on_tri(static_cast<int>(t));
        s.add(mesh.area(static_cast<int>(t)) * g.squaredNorm());
    }
    return s.value();
}

/// Integral of u(c, y)^2 along the vertical mesh line x = c for y in
/// [y0, y1]. The trace of a P1 function is piecewise linear, integrated
/// exactly per segment.
inline double line_trace_sq_x(const FEFunction& u, double c, double y0, double y1) {
    const auto& mesh = *u.mesh;
    std::vector<std::pair<double, double>> samples;  // (y, value)
    const double tol = 1e-9;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        const auto& p = mesh.nodes[i];
        if (std::abs(p[0] - c) <= tol && p[1] >= y0 - tol && p[1] <= y1 + tol)
            samples.emplace_back(p[1], u.values[i]);
    }
    if (samples.size() < 2) throw std::domain_error("line_trace_sq_x: x = c is not a mesh line");
    std::sort(samples.begin(), samples.end());
    NeumaierSum s;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double len = samples[i + 1].first - samples[i].first;
        const double a = samples[i].second, b = samples[i + 1].second;
        s.add(len * (a * a + a * b + b * b) / 3.0);
    }
    return s.value();
}

}  // namespace tmcert::fem2d
