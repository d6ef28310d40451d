// Generalized eigensolver and the weighted 1D cross-check problem.
//
// Reference values: the unit square Dirichlet/Neumann ground values 2 pi^2
// and pi^2, the 1D root 4.0214 for a = pi, the Dirichlet limit kappa -> pi^2
// for large a, and the small-a expansion kappa ~ 2a obtained from
// sqrt(k) tan(sqrt(k)/2) = a with tan x ~ x.

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "tmcert/eigensolve.hpp"
#include "tmcert/geometry.hpp"
#include "tmcert/spectra.hpp"

using namespace tmcert;
using namespace tmcert::eigensolve;
using tmcert::geometry::preset_domain;
using tmcert::geometry::triangulate;

TEST_CASE("scalar pencil") {
    fem2d::SymSparse K, M;
    K.n = M.n = 1;
    K.entries = {{0, 0, 2.0}};
    M.entries = {{0, 0, 1.0}};
    const auto r = smallest_eigenpairs(K, M, {.k = 1});
    CHECK(r.eigenvalues[0] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("unit square Dirichlet ground state brackets 2 pi^2 from above") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 1.0 / 64);
    auto sys = fem2d::assemble(mesh, fem2d::BcSpec::all_dirichlet());
    const auto r = smallest_eigenpairs(sys.K, sys.M, {.k = 3, .tol = 1e-10});
    CHECK(r.eigenvalues[0] >= 2 * pi_sq() - 1e-9);
    CHECK(r.eigenvalues[0] <= 2 * pi_sq() * 1.005);
    CHECK(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));
    for (double res : r.residuals) CHECK(res <= 1e-10);

    // M-orthonormality of the returned block
    auto Ms = sys.M.to_sparse();
    Eigen::MatrixXd G =
        r.eigenvectors.transpose() * (Ms.selfadjointView<Eigen::Lower>() * r.eigenvectors);
    CHECK((G - Eigen::MatrixXd::Identity(3, 3)).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("Neumann deflation returns the first positive eigenvalue") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 1.0 / 32);
    auto sys = fem2d::assemble(mesh, fem2d::BcSpec::all_neumann());
    const auto r = smallest_eigenpairs(sys.K, sys.M, {.k = 1, .deflate_constants = true});
    CHECK(r.eigenvalues[0] >= pi_sq() - 1e-8);
    CHECK(r.eigenvalues[0] <= pi_sq() * 1.01);
}

TEST_CASE("eigenvalues shrink under refinement and truncation growth") {
    const auto dom = preset_domain("l_shape", {{"T", 3.0}});
    const auto mesh = triangulate(dom, 1.0 / 16);
    auto sys = fem2d::assemble(mesh, fem2d::BcSpec::all_dirichlet());
    const double lam_h = smallest_eigenpairs(sys.K, sys.M, {.k = 1}).eigenvalues[0];

    const auto fine = geometry::refine(mesh);
    auto sys2 = fem2d::assemble(fine, fem2d::BcSpec::all_dirichlet());
    const double lam_h2 = smallest_eigenpairs(sys2.K, sys2.M, {.k = 1}).eigenvalues[0];
    CHECK(lam_h2 <= lam_h + 1e-12);

    const auto longer = triangulate(preset_domain("l_shape", {{"T", 4.0}}), 1.0 / 16);
    auto sys3 = fem2d::assemble(longer, fem2d::BcSpec::all_dirichlet());
    const double lam_T4 = smallest_eigenpairs(sys3.K, sys3.M, {.k = 1}).eigenvalues[0];
    CHECK(lam_T4 <= lam_h + 1e-12);
}

TEST_CASE("mixed conditions: Dirichlet on the symmetry line only") {
    // unit square, Dirichlet at x = 0 and Neumann elsewhere: ground value pi^2/4
    const auto mesh = triangulate(preset_domain("half_guide_mixed", {{"a", 1.0}, {"b", 1.0}}),
                                  1.0 / 32);
    auto sys = fem2d::assemble(
        mesh, fem2d::BcSpec::mixed({{geometry::EdgeTag::dirichlet, fem2d::Condition::dirichlet},
                                    {geometry::EdgeTag::neumann, fem2d::Condition::neumann}}));
    const auto r = smallest_eigenpairs(sys.K, sys.M, {.k = 1});
    CHECK(r.eigenvalues[0] >= pi_sq() / 4 - 1e-9);
    CHECK(r.eigenvalues[0] <= pi_sq() / 4 * 1.005);
}

TEST_CASE("solves are deterministic") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 2.0}, {"b", 1.0}}), 1.0 / 16);
    auto sys = fem2d::assemble(mesh, fem2d::BcSpec::all_dirichlet());
    const auto a = smallest_eigenpairs(sys.K, sys.M, {.k = 2});
    const auto b = smallest_eigenpairs(sys.K, sys.M, {.k = 2});
    CHECK(a.eigenvalues == b.eigenvalues);
}

TEST_CASE("exhausted iteration budget is reported, not truncated") {
    const auto mesh = triangulate(preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}), 1.0 / 8);
    auto sys = fem2d::assemble(mesh, fem2d::BcSpec::all_dirichlet());
    EigenOptions opts;
    opts.k = 1;
    opts.max_iter_factor = 0;
    CHECK_THROWS_AS(smallest_eigenpairs(sys.K, sys.M, opts), std::runtime_error);
}

TEST_CASE("weighted 1D problem reproduces the transcendental root") {
    // a = pi: reference root 4.0214
    const double k_pi = fem1d_weighted_eigs(kPi, 8.0, 1e-3);
    CHECK(std::abs(k_pi - 4.0214) < 1e-2);

    // large a: Dirichlet limit pi^2 approached from below
    const double k_big = fem1d_weighted_eigs(1e3, 2.0, 1e-3);
    CHECK(k_big < pi_sq());
    CHECK(pi_sq() - k_big < 0.08);

    // small a: kappa ~ 2a from the first-order expansion of the root
    const double a = 0.01;
    const double k_small = fem1d_weighted_eigs(a, 600.0, 0.01);
    CHECK(std::abs(k_small - 2 * a) < 0.05 * 2 * a);
}

TEST_CASE("1D solver input validation") {
    CHECK_THROWS_AS(fem1d_weighted_eigs(-1.0, 8.0, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(fem1d_weighted_eigs(kPi, 0.4, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(fem1d_weighted_eigs(kPi, 8.0, -1e-3), std::invalid_argument);
}

TEST_CASE("laplacian_eigs composes mesh, assembly and solve") {
    const auto dom = preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}});
    spectra::LaplacianOptions lo;
    const auto r = spectra::laplacian_eigs(dom, spectra::Bc::dirichlet, 2, 1.0 / 16, 4.0, lo);
    REQUIRE(r.eigenvalues.size() == 2);
    REQUIRE(r.extrapolated.size() == 2);
    CHECK(r.eigenvalues[0] >= 2 * pi_sq() - 1e-9);
    // the Richardson estimate lies between the true value and the upper bound
    CHECK(r.extrapolated[0] <= r.eigenvalues[0]);
    CHECK(r.extrapolated[0] >= 2 * pi_sq() - 0.05);

    // ported domain: T-sensitivity reported on request
    spectra::LaplacianOptions lot;
    lot.t_sensitivity = true;
    lot.extrapolate = false;
    const auto rl = spectra::laplacian_eigs(preset_domain("l_shape"), spectra::Bc::dirichlet, 1,
                                            1.0 / 8, 3.0, lot);
    CHECK(std::isfinite(rl.t_sensitivity));
    CHECK(rl.t_sensitivity < 0.05);
}
