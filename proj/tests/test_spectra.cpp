// Rectangle spectra, essential-spectrum threshold, classification, product
// spectra and the cutoff-ordering check.
//
// The rectangle lists are cross-checked against a brute-force enumeration
// oracle; FEM values are compared to the analytic lists within the solver's
// own discretization estimate.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tmcert/spectra.hpp"

using namespace tmcert;
using namespace tmcert::spectra;

namespace {
// enumeration oracle, independent of the library's cutoff-doubling logic
std::vector<double> brute_rect(double a, double b, Bc bc, std::size_t count) {
    std::vector<double> v;
    const int lo = bc == Bc::dirichlet ? 1 : 0;
    for (int m = lo; m <= 60; ++m)
        for (int n = lo; n <= 60; ++n)
            v.push_back(pi_sq() * (m * m / (a * a) + n * n / (b * b)));
    std::sort(v.begin(), v.end());
    v.resize(count);
    return v;
}
}  // namespace

TEST_CASE("rectangle spectra: closed forms") {
    // unit square Dirichlet starts at 2 pi^2
    CHECK(rect_spectrum(1, 1, Bc::dirichlet, 1)[0] == Catch::Approx(2 * pi_sq()).margin(1e-12));

    // Neumann with a >= b: 0, pi^2/a^2, min(pi^2/b^2, 4 pi^2/a^2)
    for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 1}, {2, 1}, {3, 1}, {1.7, 1.3}}) {
        const auto v = rect_spectrum(a, b, Bc::neumann, 3);
        CHECK(v[0] == Catch::Approx(0.0).margin(1e-14));
        CHECK(v[1] == Catch::Approx(pi_sq() / (a * a)).margin(1e-12));
        CHECK(v[2] ==
              Catch::Approx(std::min(pi_sq() / (b * b), 4 * pi_sq() / (a * a))).margin(1e-12));
    }

    // a=2, b=1: second positive Neumann value is min(pi^2, pi^2) = pi^2
    CHECK(rect_spectrum(2, 1, Bc::neumann, 3)[2] == Catch::Approx(pi_sq()).margin(1e-12));

    for (Bc bc : {Bc::dirichlet, Bc::neumann}) {
        const auto got = rect_spectrum(1.7, 1.3, bc, 20);
        const auto want = brute_rect(1.7, 1.3, bc, 20);
        for (std::size_t i = 0; i < 20; ++i)
            CHECK(got[i] == Catch::Approx(want[i]).margin(1e-10));
    }

    CHECK_THROWS_AS(rect_spectrum(1, 2, Bc::dirichlet, 3), std::invalid_argument);
    CHECK(rect_spectrum(1, 1, Bc::dirichlet, 0).empty());
}

TEST_CASE("FEM agrees with the analytic rectangle list within its own estimate") {
    const auto dom = geometry::preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}});
    const auto r = laplacian_eigs(dom, Bc::dirichlet, 4, 1.0 / 32, 4.0);
    const auto exact = rect_spectrum(1, 1, Bc::dirichlet, 4);
    REQUIRE(r.extrapolated.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(r.eigenvalues[i] >= exact[i] - 1e-9);  // conforming upper bound
        const double est = std::abs(r.eigenvalues[i] - r.extrapolated[i]);
        CHECK(r.eigenvalues[i] - exact[i] <= 3 * est + 1e-8);
    }
}

TEST_CASE("essential threshold") {
    CrossSection square = rect_section(1, 1);
    CHECK(essential_threshold({square}).threshold == Catch::Approx(pi_sq()).margin(1e-12));

    CrossSection annulus;
    annulus.name = "annulus";
    annulus.simply_connected = false;
    CHECK(essential_threshold({square, annulus}).threshold == 0.0);

    CrossSection s2 = square;
    s2.lambda_N = 4.0;
    CHECK(essential_threshold({square, s2}).threshold == Catch::Approx(4.0));

    // monotone: adding a section never raises the threshold
    DetRng rng(11);
    std::vector<CrossSection> secs;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i) {
        CrossSection s;
        s.name = "s";
        s.lambda_N = rng.uniform(0.5, 20.0);
        s.lambda_D = s.lambda_N + 1;
        secs.push_back(s);
        const double t = essential_threshold(secs).threshold;
        CHECK(t <= prev + 1e-15);
        prev = t;
    }

    CHECK_THROWS_AS(essential_threshold({}), std::invalid_argument);
}

TEST_CASE("classification against the threshold") {
    const EssentialSpectrum ess{pi_sq()};
    CHECK(classify_eigenvalue(9.1722, ess) == SpectralClass::discrete);
    CHECK(classify_eigenvalue(9.1722 + pi_sq(), ess) == SpectralClass::embedded);
    // boundary convention: lambda = threshold is embedded
    CHECK(classify_eigenvalue(pi_sq(), ess) == SpectralClass::embedded);
    CHECK(classify_eigenvalue(0.0, EssentialSpectrum{0.0}) == SpectralClass::embedded);
    CHECK_THROWS_AS(classify_eigenvalue(-1.0, ess), std::invalid_argument);
}

TEST_CASE("product spectrum merges the two families") {
    const double lam = 9.1722;
    const auto out = product_spectrum(1.0, {lam}, {}, lam + 10 * pi_sq(), 1.0);
    REQUIRE(out.size() == 4);
    for (int m = 0; m < 4; ++m) {
        CHECK(out[m].value == Catch::Approx(lam + m * m * pi_sq()).margin(1e-12));
        CHECK(out[m].m == m);
        CHECK(out[m].family == 'D');
    }
    CHECK(out[0].cls == SpectralClass::discrete);  // 9.1722 < pi^2
    CHECK(out[1].cls == SpectralClass::embedded);

    // Neumann family starts at m = 1 (m = 0 is the null field)
    const auto n = product_spectrum(1.0, {}, {5.0}, 60.0, 1.0);
    REQUIRE(!n.empty());
    CHECK(n[0].m == 1);
    CHECK(n[0].value == Catch::Approx(5.0 + pi_sq()).margin(1e-12));

    CHECK(product_spectrum(1.0, {}, {}, 100.0, 1.0).empty());
}

TEST_CASE("cutoff ordering holds on every tested section") {
    const auto sq = rect_section(1, 1);
    auto r = filonov_check(sq);
    CHECK(r.ok);
    CHECK(r.margin == Catch::Approx(2 * pi_sq() - pi_sq()).margin(1e-12));
    REQUIRE(r.second_margin.has_value());
    CHECK(*r.second_margin > 0);

    const auto wide = rect_section(2, 1);
    // min(pi^2, pi^2) < 5 pi^2/4
    CHECK(filonov_check(wide).margin == Catch::Approx(5 * pi_sq() / 4 - pi_sq() / 4).margin(1e-12));

    // FEM-backed section: the bounded corner square with both conditions
    const auto fem = fem_section(geometry::preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}}),
                                 1.0 / 16);
    CHECK(filonov_check(fem).ok);
    CHECK(fem.provenance_N == "fem");

    CrossSection empty;
    CHECK_THROWS_AS(filonov_check(empty), std::invalid_argument);
}

TEST_CASE("disk cutoff from the tabulated root") {
    // first positive zero of J1' is 1.8411837813406593
    const double z = 1.8411837813406593;
    CHECK(disk_neumann_lambda(1.0) == Catch::Approx(z * z).margin(1e-9));
    CHECK(disk_neumann_lambda(2.0) == Catch::Approx(z * z / 4).margin(1e-9));
    const auto d = disk_section(1.0);
    CHECK(d.provenance_N == "tabulated");
    CHECK(filonov_check(d).ok);  // (j'_{1,1})^2 < (j_{0,1})^2
}
