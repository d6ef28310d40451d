#pragma once

// Explicit Maxwell mode families and compactly supported test fields as
// samplable 3D vector fields, with finite-difference residual checks and a
// midpoint-quadrature Rayleigh quotient.
//
// Conventions:
//  - guided modes (TE/TM/TEM) live on a cross-section in the (x,y) plane and
//    propagate along z; below cutoff they decay as exp(-sqrt(cutoff-lambda) z)
//  - trapped-mode constructors take a 2D function of (y,z) and extrude along x
//  - FD differentiation uses central differences with step h_fd; stencils
//    must stay at least 2 h_fd inside the smooth region, which the callers
//    arrange by keeping quadrature points off support boundaries
//  - FEM-backed scalar inputs are sampled by P1 interpolation, so residual
//    checks that need second derivatives only accept closed-form inputs

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmcert/fem2d.hpp"
#include "tmcert/geometry.hpp"
#include "tmcert/numerics.hpp"

namespace tmcert::modes {

using Vec3c = Eigen::Vector3cd;
using Vec3 = Eigen::Vector3d;
using Complex = std::complex<double>;

/// Scalar field on a 2D region with its gradient, either closed form or a
/// P1 interpolant of an FE function.
struct ScalarField2 {
    std::function<double(double, double)> value;
    std::function<Eigen::Vector2d(double, double)> grad;

    static ScalarField2 closed_form(std::function<double(double, double)> v,
                                    std::function<Eigen::Vector2d(double, double)> g) {
        return {std::move(v), std::move(g)};
    }
    static ScalarField2 from_fe(const fem2d::FEFunction& u) {
        return {[&u](double x, double y) { return u.eval(x, y); },
                [&u](double x, double y) { return u.grad_at(x, y); }};
    }
};

struct Box3 {
    Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
    bool contains(const Vec3& p, double tol = 0) const {
        for (int i = 0; i < 3; ++i)
            if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
        return true;
    }
};

struct SupportInfo {
    bool bounded = true;
    std::vector<Box3> boxes;   ///< support when bounded
    double decay_rate = 0;     ///< exponential rate when unbounded
};

struct VectorField3 {
    std::function<Vec3c(double, double, double)> E;
    SupportInfo support;

    Vec3c operator()(double x, double y, double z) const { return E(x, y, z); }
};

// ---------------------------------------------------------------------------
// Guided mode families on a cross-section
// ---------------------------------------------------------------------------

namespace detail {
/// Longitudinal factor exp(+-i beta z) above cutoff, real decay below.
inline std::function<Complex(double)> z_factor(double lambda, double cutoff, int sign) {
    if (lambda >= cutoff) {
        const double beta = std::sqrt(lambda - cutoff);
        return [beta, sign](double z) {
            return std::exp(Complex(0.0, sign * beta * z));
        };
    }
    const double rate = std::sqrt(cutoff - lambda);
    return [rate](double z) { return Complex(std::exp(-rate * z), 0.0); };
}
}  // namespace detail

/// First TE mode: (curl_2D phi_N, 0) exp(+-i beta_N z) with
/// beta_N = sqrt(lambda - lambda_N) and curl_2D phi = (d_y phi, -d_x phi).
/// Below cutoff the evanescent convention replaces the phase by real decay.
inline VectorField3 te_mode(const ScalarField2& phi_n, double lambda_n, double lambda,
                            int sign = +1) {
    if (!(lambda_n > 0)) throw std::invalid_argument("te_mode: lambda_N must be > 0");
    auto zf = detail::z_factor(lambda, lambda_n, sign);
    VectorField3 f;
    f.support.bounded = false;
    f.support.decay_rate = lambda < lambda_n ? std::sqrt(lambda_n - lambda) : 0.0;
    f.E = [phi_n, zf](double x, double y, double z) -> Vec3c {
        const auto g = phi_n.grad(x, y);
        const Complex w = zf(z);
        return {g[1] * w, -g[0] * w, Complex(0, 0)};
    };
    return f;
}

/// First TM mode: (grad phi_D, -+ i beta_D^{-1} lambda_D phi_D) exp(+-i beta_D z).
/// Requires lambda > lambda_D; at lambda = lambda_D the longitudinal factor
/// beta_D^{-1} is singular and the request is rejected.
inline VectorField3 tm_mode(const ScalarField2& phi_d, double lambda_d, double lambda,
                            int sign = +1) {
    if (!(lambda_d > 0)) throw std::invalid_argument("tm_mode: lambda_D must be > 0");
    if (!(lambda > lambda_d))
        throw std::invalid_argument("tm_mode: requires lambda > lambda_D (beta_D^{-1} singular)");
    const double beta = std::sqrt(lambda - lambda_d);
    VectorField3 f;
    f.support.bounded = false;
    f.E = [phi_d, lambda_d, beta, sign](double x, double y, double z) -> Vec3c {
        const auto g = phi_d.grad(x, y);
        const Complex w = std::exp(Complex(0.0, sign * beta * z));
        const Complex ez = Complex(0.0, -sign * lambda_d / beta) * phi_d.value(x, y);
        return {g[0] * w, g[1] * w, ez * w};
    };
    return f;
}

/// TEM mode on a non simply connected section: (grad phi, 0) exp(+-i sqrt(lambda) z).
/// phi is kept unnormalized; Rayleigh quotients are normalization invariant.
inline VectorField3 tem_mode(const ScalarField2& pot, double lambda, int sign = +1) {
    if (lambda < 0) throw std::invalid_argument("tem_mode: lambda must be >= 0");
    const double beta = std::sqrt(lambda);
    VectorField3 f;
    f.support.bounded = false;
    f.E = [pot, beta, sign](double x, double y, double z) -> Vec3c {
        const auto g = pot.grad(x, y);
        const Complex w = std::exp(Complex(0.0, sign * beta * z));
        return {g[0] * w, g[1] * w, Complex(0, 0)};
    };
    return f;
}

/// Capacitor potential of an annular section: harmonic, 1 on the inner
/// conductor and 0 on the outer one. The discrete maximum principle keeps
/// the values in [0,1] up to solver tolerance.
struct CapacitorPotential {
    fem2d::FEFunction u;
    double energy = 0;  ///< integral of |grad u|^2

    ScalarField2 as_field() const { return ScalarField2::from_fe(u); }
};

inline CapacitorPotential capacitor_potential(const geometry::TriMesh& mesh) {
    bool has_inner = false, has_outer = false;
    for (const auto& e : mesh.boundary_edges) {
        has_inner |= e.tag == geometry::EdgeTag::inner_conductor;
        has_outer |= e.tag == geometry::EdgeTag::outer_conductor;
    }
    if (!has_inner || !has_outer)
        throw std::invalid_argument("capacitor_potential: mesh lacks conductor tags");
    CapacitorPotential cp;
    cp.u = fem2d::solve_laplace_dirichlet(mesh, {{geometry::EdgeTag::inner_conductor, 1.0},
                                                 {geometry::EdgeTag::outer_conductor, 0.0}});
    cp.energy = fem2d::integral_grad_sq(cp.u);
    return cp;
}

// ---------------------------------------------------------------------------
// Trapped modes of product domains
// ---------------------------------------------------------------------------

struct TrappedMode {
    VectorField3 field;
    double lambda = 0;
};

/// From a 2D Dirichlet eigenfunction phi(y,z) with -Lap phi = lambda0 phi:
///   E = (cos(m pi x/a) phi, -(m pi/(a lambda0)) sin(m pi x/a) grad phi),
/// an eigenfield with lambda = lambda0 + m^2 pi^2 / a^2. m = 0 reduces to
/// (phi, 0, 0).
inline TrappedMode trapped_mode_dirichlet(const ScalarField2& phi, double lambda0, int m,
                                          double a) {
    if (!(lambda0 > 0)) throw std::invalid_argument("trapped_mode_dirichlet: lambda must be > 0");
    if (m < 0 || !(a > 0)) throw std::invalid_argument("trapped_mode_dirichlet: need m >= 0, a > 0");
    const double km = m * kPi / a;
    const double coef = km / lambda0;
    TrappedMode tm;
    tm.lambda = lambda0 + km * km;
    tm.field.support.bounded = false;
    tm.field.E = [phi, km, coef](double x, double y, double z) -> Vec3c {
        const double c = std::cos(km * x), s = std::sin(km * x);
        const auto g = phi.grad(y, z);
        return {Complex(c * phi.value(y, z), 0), Complex(-coef * s * g[0], 0),
                Complex(-coef * s * g[1], 0)};
    };
    return tm;
}

/// From a 2D Neumann eigenfunction phi(y,z):
///   E = (0, sin(m pi x/a) d_z phi, -sin(m pi x/a) d_y phi), m >= 1,
/// with lambda = lambda0 + m^2 pi^2 / a^2. The field is divergence free by
/// construction; m = 0 would be identically zero and is rejected.
inline TrappedMode trapped_mode_neumann(const ScalarField2& phi, double lambda0, int m, double a) {
    if (m < 1) throw std::invalid_argument("trapped_mode_neumann: m >= 1 required (m = 0 is the null field)");
    if (!(lambda0 > 0) || !(a > 0))
        throw std::invalid_argument("trapped_mode_neumann: need lambda > 0, a > 0");
    const double km = m * kPi / a;
    TrappedMode tm;
    tm.lambda = lambda0 + km * km;
    tm.field.support.bounded = false;
    tm.field.E = [phi, km](double x, double y, double z) -> Vec3c {
        const double s = std::sin(km * x);
        const auto g = phi.grad(y, z);
        return {Complex(0, 0), Complex(s * g[1], 0), Complex(-s * g[0], 0)};
    };
    return tm;
}

// ---------------------------------------------------------------------------
// Compactly supported test fields (zero-extended into the guide)
// ---------------------------------------------------------------------------

/// Cuboid resonator (-a/2,a/2) x (-b/2,b/2) x (-L,0):
/// E = (0, cos(pi x/a) sin(pi z/L), 0) inside, 0 outside. Vanishes at z = 0,
/// so the zero extension keeps the normal trace continuous.
inline VectorField3 testfield_cuboid_te(double a, double b, double L) {
    if (!(a > 0 && b > 0 && L > 0)) throw std::invalid_argument("testfield_cuboid_te: bad params");
    VectorField3 f;
    f.support.bounded = true;
    f.support.boxes = {{Vec3(-a / 2, -b / 2, -L), Vec3(a / 2, b / 2, 0)}};
    const Box3 box = f.support.boxes[0];
    f.E = [a, L, box](double x, double y, double z) -> Vec3c {
        if (!box.contains({x, y, z})) return Vec3c::Zero();
        return {Complex(0, 0), Complex(std::cos(kPi * x / a) * std::sin(kPi * z / L), 0),
                Complex(0, 0)};
    };
    return f;
}

/// Resonator section S_R x (-L,0) driven by a Neumann eigenfunction:
/// E = (curl_2D phi_N, 0) sin(pi z/L) inside, 0 outside.
inline VectorField3 testfield_te_resonator(const ScalarField2& phi_n, double L,
                                           const Box3& section_box) {
    if (!(L > 0)) throw std::invalid_argument("testfield_te_resonator: L must be > 0");
    VectorField3 f;
    f.support.bounded = true;
    Box3 b = section_box;
    b.lo[2] = -L;
    b.hi[2] = 0;
    f.support.boxes = {b};
    f.E = [phi_n, L, b](double x, double y, double z) -> Vec3c {
        if (!b.contains({x, y, z})) return Vec3c::Zero();
        const auto g = phi_n.grad(x, y);
        const double s = std::sin(kPi * z / L);
        return {Complex(g[1] * s, 0), Complex(-g[0] * s, 0), Complex(0, 0)};
    };
    return f;
}

/// TEM resonator field: E = (grad phi, 0) sin(pi z/L) on the annular section,
/// zero-extended. `section_boxes` tile the annulus (transverse boxes, z
/// ranges are overwritten).
inline VectorField3 testfield_tem_resonator(const ScalarField2& pot, double L,
                                            std::vector<Box3> section_boxes) {
    if (!(L > 0)) throw std::invalid_argument("testfield_tem_resonator: L must be > 0");
    VectorField3 f;
    f.support.bounded = true;
    for (auto& b : section_boxes) {
        b.lo[2] = -L;
        b.hi[2] = 0;
    }
    f.support.boxes = section_boxes;
    auto boxes = f.support.boxes;
    f.E = [pot, L, boxes](double x, double y, double z) -> Vec3c {
        bool in = false;
        for (const auto& b : boxes)
            if (b.contains({x, y, z})) { in = true; break; }
        if (!in) return Vec3c::Zero();
        const auto g = pot.grad(x, y);
        const double s = std::sin(kPi * z / L);
        return {Complex(g[0] * s, 0), Complex(g[1] * s, 0), Complex(0, 0)};
    };
    return f;
}

/// TM resonator field with the gradient correction that cancels the trace at
/// z = 0: E = (grad phi_D sin(pi z/L), alpha phi_D (1 - cos(pi z/L))) with
/// alpha = L lambda_D / pi, zero-extended.
inline VectorField3 testfield_tm_resonator(const ScalarField2& phi_d, double lambda_d, double L,
                                           const Box3& section_box) {
    if (!(L > 0 && lambda_d > 0)) throw std::invalid_argument("testfield_tm_resonator: bad params");
    const double alpha = L * lambda_d / kPi;
    VectorField3 f;
    f.support.bounded = true;
    Box3 b = section_box;
    b.lo[2] = -L;
    b.hi[2] = 0;
    f.support.boxes = {b};
    f.E = [phi_d, alpha, L, b](double x, double y, double z) -> Vec3c {
        if (!b.contains({x, y, z})) return Vec3c::Zero();
        const auto g = phi_d.grad(x, y);
        const double s = std::sin(kPi * z / L), c = std::cos(kPi * z / L);
        return {Complex(g[0] * s, 0), Complex(g[1] * s, 0),
                Complex(alpha * phi_d.value(x, y) * (1.0 - c), 0)};
    };
    return f;
}

// ---------------------------------------------------------------------------
// FD differential operators
// ---------------------------------------------------------------------------

inline Vec3c curl_fd(const VectorField3& f, const Vec3& p, double h) {
    auto d = [&](int axis, int comp) {
        Vec3 pp = p, pm = p;
        pp[axis] += h;
        pm[axis] -= h;
        return (f(pp[0], pp[1], pp[2])[comp] - f(pm[0], pm[1], pm[2])[comp]) / (2 * h);
    };
    return {d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)};
}

inline Complex div_fd(const VectorField3& f, const Vec3& p, double h) {
    Complex s = 0;
    for (int a = 0; a < 3; ++a) {
        Vec3 pp = p, pm = p;
        pp[a] += h;
        pm[a] -= h;
        s += (f(pp[0], pp[1], pp[2])[a] - f(pm[0], pm[1], pm[2])[a]) / (2 * h);
    }
    return s;
}

/// curl curl f at p via second differences: (curl curl f)_i =
/// sum_j d_i d_j f_j - Lap f_i evaluated with 3- and 4-point stencils.
inline Vec3c curlcurl_fd(const VectorField3& f, const Vec3& p, double h) {
    auto at = [&](double dx, double dy, double dz) {
        return f(p[0] + dx, p[1] + dy, p[2] + dz);
    };
    const Vec3c c0 = at(0, 0, 0);
    Vec3c second[3];  // second[a] = d^2 f / d axis_a^2 (all components)
    for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        second[a] = (at(e[0], e[1], e[2]) + at(-e[0], -e[1], -e[2]) - 2 * c0) / (h * h);
    }
    auto mixed = [&](int a, int b, int comp) {  // d_a d_b f_comp, a != b
        Vec3 ea = Vec3::Zero(), eb = Vec3::Zero();
        ea[a] = h;
        eb[b] = h;
        const Vec3c pp = at(ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]);
        const Vec3c pm = at(ea[0] - eb[0], ea[1] - eb[1], ea[2] - eb[2]);
        const Vec3c mp = at(-ea[0] + eb[0], -ea[1] + eb[1], -ea[2] + eb[2]);
        const Vec3c mm = at(-ea[0] - eb[0], -ea[1] - eb[1], -ea[2] - eb[2]);
        return (pp[comp] - pm[comp] - mp[comp] + mm[comp]) / (4 * h * h);
    };
    Vec3c out;
    for (int i = 0; i < 3; ++i) {
        Complex grad_div = second[i][i];  // d_i d_i f_i
        for (int j = 0; j < 3; ++j)
            if (j != i) grad_div += mixed(i, j, j);
        const Complex lap = second[0][i] + second[1][i] + second[2][i];
        out[i] = grad_div - lap;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rayleigh quotient and residuals
// ---------------------------------------------------------------------------

/// Midpoint-rule quadrature grid over one or more boxes; n[i] cells per axis
/// in every box.
struct QuadGrid {
    std::vector<Box3> boxes;
    std::array<int, 3> n = {16, 16, 16};

    static QuadGrid over(const SupportInfo& s, std::array<int, 3> n) {
        if (!s.bounded)
            throw std::invalid_argument("QuadGrid::over: field support is unbounded");
        return {s.boxes, n};
    }
};

struct QuotientResult {
    double value = 0;
    double error_estimate = 0;
};

namespace detail {
inline std::pair<double, double> quotient_sums(const VectorField3& f, const QuadGrid& g,
                                               double h_fd) {
    NeumaierSum num, den;
    for (const auto& b : g.boxes) {
        const Vec3 d = (b.hi - b.lo);
        const double w = (d[0] / g.n[0]) * (d[1] / g.n[1]) * (d[2] / g.n[2]);
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j)
                for (int k = 0; k < g.n[2]; ++k) {
                    const Vec3 p(b.lo[0] + (i + 0.5) * d[0] / g.n[0],
                                 b.lo[1] + (j + 0.5) * d[1] / g.n[1],
                                 b.lo[2] + (k + 0.5) * d[2] / g.n[2]);
                    den.add(w * f(p[0], p[1], p[2]).squaredNorm());
                    num.add(w * curl_fd(f, p, h_fd).squaredNorm());
                }
    }
    return {num.value(), den.value()};
}
}  // namespace detail

/// (int |curl E|^2) / (int |E|^2) over the grid, curl by central differences.
/// The error estimate compares against a grid with half the resolution.
inline QuotientResult rayleigh_quotient(const VectorField3& f, const QuadGrid& grid,
                                        double h_fd = 1e-4) {
    const auto [num, den] = detail::quotient_sums(f, grid, h_fd);
    if (!(den > 0)) throw std::invalid_argument("rayleigh_quotient: zero denominator");
    QuadGrid coarse = grid;
    for (auto& n : coarse.n) n = std::max(1, n / 2);
    const auto [num2, den2] = detail::quotient_sums(f, coarse, h_fd);
    QuotientResult r;
    r.value = num / den;
    r.error_estimate = std::abs(r.value - num2 / std::max(den2, 1e-300)) / 3.0;
    return r;
}

struct BoundarySample {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
};

struct ResidualReport {
    double pde = 0;    ///< max |curl curl E - lambda E|
    double div = 0;    ///< max |div E|
    double trace = 0;  ///< max |E x nu| over boundary samples
};

/// Max-norm FD residuals of the eigenfield equations at the given interior
/// points and boundary samples. Interior points must keep the FD stencil
/// inside the smooth region of the field.
inline ResidualReport maxwell_residual(const VectorField3& f, double lambda,
                                       const std::vector<Vec3>& interior,
                                       const std::vector<BoundarySample>& boundary,
                                       double h_fd = 1e-4) {
    ResidualReport r;
    for (const auto& p : interior) {
        const Vec3c e = f(p[0], p[1], p[2]);
        r.pde = std::max(r.pde, (curlcurl_fd(f, p, h_fd) - lambda * e).norm());
        r.div = std::max(r.div, std::abs(div_fd(f, p, h_fd)));
    }
    for (const auto& s : boundary) {
        const Vec3c e = f(s.point[0], s.point[1], s.point[2]);
        const Vec3c cross(e[1] * s.normal[2] - e[2] * s.normal[1],
                          e[2] * s.normal[0] - e[0] * s.normal[2],
                          e[0] * s.normal[1] - e[1] * s.normal[0]);
        r.trace = std::max(r.trace, cross.norm());
    }
    return r;
}

/// CSV field samples: x,y,z and real/imag pairs per component.
inline void export_field_csv(const VectorField3& f, const std::vector<Vec3>& points,
                             std::ostream& os) {
    os << "x,y,z,Ex_re,Ex_im,Ey_re,Ey_im,Ez_re,Ez_im\n";
    for (const auto& p : points) {
        const Vec3c e = f(p[0], p[1], p[2]);
        os << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2]);
        for (int c = 0; c < 3; ++c)
            os << ',' << format_double(e[c].real()) << ',' << format_double(e[c].imag());
        os << '\n';
    }
}

inline void export_field_csv(const VectorField3& f, const std::vector<Vec3>& points,
                             const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_field_csv: cannot open " + path);
    export_field_csv(f, points, os);
}

/// Tensor grid of sample points over a box, cell centers.
inline std::vector<Vec3> grid_points(const Box3& b, std::array<int, 3> n) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int k = 0; k < n[2]; ++k)
                pts.emplace_back(b.lo[0] + (i + 0.5) * (b.hi[0] - b.lo[0]) / n[0],
                                 b.lo[1] + (j + 0.5) * (b.hi[1] - b.lo[1]) / n[1],
                                 b.lo[2] + (k + 0.5) * (b.hi[2] - b.lo[2]) / n[2]);
    return pts;
}

}  // namespace tmcert::modes
