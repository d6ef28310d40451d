// P1 assembly, quadrature and gradients.
//
// Expected values: affine exactness is algebraically exact (patch test), the
// sin*sin quadrature target 4/pi^2 is the closed-form integral of
// sin(pi x) sin(pi y) over the unit square, and the interpolated-eigenfunction
// Rayleigh quotient converges to pi^2 at second order.

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Sparse>
#include <cmath>

#include "tmcert/fem2d.hpp"
#include "tmcert/geometry.hpp"

using namespace tmcert;
using namespace tmcert::fem2d;
using tmcert::geometry::preset_domain;
using tmcert::geometry::triangulate;

namespace {
double quad_form(const SymSparse& A, const std::vector<double>& u) {
    NeumaierSum s;
    for (const auto& e : A.entries) {
        const double c = e.v * u[e.r] * u[e.c];
        s.add(e.r == e.c ? c : 2.0 * c);
    }
    return s.value();
}
}  // namespace

TEST_CASE("patch test: affine functions are exact") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 0.25);
    auto sys = assemble(mesh, BcSpec::all_neumann());

    std::vector<double> u(mesh.nodes.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = 1.0 + 2.0 * mesh.nodes[i][0] - 3.0 * mesh.nodes[i][1];

    // int |grad u|^2 = (4 + 9) * area
    CHECK(quad_form(sys.K, u) == Catch::Approx(13.0).margin(1e-12));

    FEFunction fe{&mesh, u};
    for (const auto& g : gradient(fe)) {
        CHECK(g[0] == Catch::Approx(2.0).margin(1e-13));
        CHECK(g[1] == Catch::Approx(-3.0).margin(1e-13));
    }
}

TEST_CASE("Neumann stiffness annihilates constants") {
    const auto mesh = triangulate(preset_domain("l_shape", {{"T", 2.0}}), 0.25);
    auto sys = assemble(mesh, BcSpec::all_neumann());
    const std::vector<double> ones(mesh.nodes.size(), 1.0);
    CHECK(std::abs(quad_form(sys.K, ones)) < 1e-12);

    auto Ks = sys.K.to_sparse();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(sys.K.n);
    CHECK((Ks.selfadjointView<Eigen::Lower>() * v).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("mass is positive definite and row sums aggregate element areas") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 2.0}, {"b", 1.0}}), 0.25);
    auto sys = assemble(mesh, BcSpec::all_neumann());

    DetRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> u(mesh.nodes.size());
        for (auto& x : u) x = rng.uniform(-1.0, 1.0);
        CHECK(quad_form(sys.M, u) > 0);
    }

    // row sum of the consistent mass = one third of the areas touching the node
    auto Ms = sys.M.to_sparse();
    Eigen::VectorXd rowsum =
        Ms.selfadjointView<Eigen::Lower>() * Eigen::VectorXd::Ones(sys.M.n);
    std::vector<double> expected(mesh.nodes.size(), 0.0);
    for (std::size_t t = 0; t < mesh.tris.size(); ++t)
        for (int v = 0; v < 3; ++v)
            expected[mesh.tris[t][v]] += mesh.area(static_cast<int>(t)) / 3.0;
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(rowsum[static_cast<int>(i)] == Catch::Approx(expected[i]).margin(1e-14));

    // total mass equals the domain area
    std::vector<double> ones(mesh.nodes.size(), 1.0);
    CHECK(quad_form(sys.M, ones) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("quadrature: exactness and closed-form oracle") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 1.0 / 8);
    CHECK(integrate(mesh, [](double, double) { return 1.0; }) ==
          Catch::Approx(1.0).margin(1e-15));
    CHECK(integrate(mesh, [](double x, double) { return x; }) ==
          Catch::Approx(0.5).margin(1e-12));

    const auto fine = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 1.0 / 64);
    const double got =
        integrate(fine, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); });
    const double exact = 4.0 / pi_sq();  // int sin(pi x) dx = 2/pi per axis
    CHECK(std::abs(got - exact) < 1e-4);

    CHECK_THROWS_AS(integrate(mesh,
                              [](double x, double) {
                                  return x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
                              }),
                    std::domain_error);
}

TEST_CASE("interpolated eigenfunction Rayleigh quotient converges at second order") {
    auto quotient = [](double h) {
        const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), h);
        std::vector<double> u(mesh.nodes.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(kPi * mesh.nodes[i][0]);
        FEFunction fe{&mesh, u};
        return integral_grad_sq(fe) / integral_u_sq(fe);
    };
    const double e16 = std::abs(quotient(1.0 / 16) - pi_sq());
    const double e32 = std::abs(quotient(1.0 / 32) - pi_sq());
    CHECK(e32 < e16 / 3.0);
    CHECK(e32 < 0.01 * pi_sq());
}

TEST_CASE("zero function has zero gradient") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 0.25);
    FEFunction fe{&mesh, std::vector<double>(mesh.nodes.size(), 0.0)};
    for (const auto& g : gradient(fe)) CHECK(g.norm() == 0.0);
}

TEST_CASE("boundary-condition handling") {
    const auto mesh = triangulate(preset_domain("half_guide_mixed", {{"a", 1.0}, {"b", 1.0}}),
                                  0.25);
    // mixed assembly requires a condition for every tag that occurs
    CHECK_THROWS_AS(assemble(mesh, BcSpec::mixed({{geometry::EdgeTag::dirichlet,
                                                   Condition::dirichlet}})),
                    std::invalid_argument);
    auto sys = assemble(mesh, BcSpec::mixed({{geometry::EdgeTag::dirichlet, Condition::dirichlet},
                                             {geometry::EdgeTag::neumann, Condition::neumann}}));
    // only the symmetry line x = 0 is constrained
    CHECK(sys.dofs.constrained.size() == 5);
    CHECK(sys.dofs.n_free + static_cast<int>(sys.dofs.constrained.size()) ==
          static_cast<int>(mesh.nodes.size()));
}

TEST_CASE("empty free-dof set is an error") {
    geometry::TriMesh m;
    m.h = 1.0;
    m.nodes = {{0, 0}, {1, 0}, {0, 1}};
    m.tris = {{0, 1, 2}};
    m.boundary_edges = {{0, 1, geometry::EdgeTag::dirichlet},
                        {1, 2, geometry::EdgeTag::dirichlet},
                        {2, 0, geometry::EdgeTag::dirichlet}};
    CHECK_THROWS_AS(assemble(m, BcSpec::all_dirichlet()), std::invalid_argument);
}

TEST_CASE("trace integral along a mesh line") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 2.0}, {"b", 1.0}}), 0.125);
    std::vector<double> u(mesh.nodes.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = mesh.nodes[i][1];  // u = y
    FEFunction fe{&mesh, u};
    // int_0^1 y^2 dy = 1/3, exact because the trace is piecewise linear
    CHECK(line_trace_sq_x(fe, 1.0, 0.0, 1.0) == Catch::Approx(1.0 / 3).margin(1e-13));
    CHECK_THROWS_AS(line_trace_sq_x(fe, 0.3, 0.0, 1.0), std::domain_error);
}

TEST_CASE("Laplace solve with conductor data obeys the discrete maximum principle") {
    const auto mesh = triangulate(preset_domain("square_annulus", {{"a", 1.0}, {"b", 0.5}}),
                                  1.0 / 16);
    const auto u = solve_laplace_dirichlet(mesh, {{geometry::EdgeTag::inner_conductor, 1.0},
                                                  {geometry::EdgeTag::outer_conductor, 0.0}});
    for (double v : u.values) {
        CHECK(v >= -1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
    CHECK_THROWS_AS(solve_laplace_dirichlet(mesh, {{geometry::EdgeTag::symmetry, 1.0}}),
                    std::invalid_argument);
}
