#pragma once

// Canonical 2D spectral quantities: analytic rectangle spectra, FEM-backed
// eigenvalues of the preset domains, the essential-spectrum threshold of the
// waveguide operator and the discrete/embedded classification.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmcert/eigensolve.hpp"
#include "tmcert/fem2d.hpp"
#include "tmcert/geometry.hpp"
#include "tmcert/numerics.hpp"

namespace tmcert::spectra {

using eigensolve::EigenResult;

/// Cross-section of a waveguide branch together with its TE/TM cutoffs.
/// lambda_N is the first positive Neumann eigenvalue, lambda_D the first
/// Dirichlet one. For any section of finite measure lambda_N < lambda_D.
struct CrossSection {
    std::string name;
    bool simply_connected = true;
    double lambda_N = std::numeric_limits<double>::quiet_NaN();
    double lambda_D = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> lambda_N2;  ///< second positive Neumann eigenvalue
    std::string provenance_N = "analytic";  ///< analytic | fem | tabulated
    std::string provenance_D = "analytic";
};

struct EssentialSpectrum {
    double threshold = 0;  ///< sigma_ess = [threshold, infinity)
};

enum class SpectralClass { discrete, embedded };

inline const char* to_string(SpectralClass c) {
    return c == SpectralClass::discrete ? "discrete" : "embedded";
}

enum class Bc { dirichlet, neumann };

/// Ascending Laplacian eigenvalues of the rectangle (0,a) x (0,b):
/// Neumann {(m pi/a)^2 + (n pi/b)^2, m,n >= 0}, Dirichlet the same with
/// m,n >= 1.
inline std::vector<double> rect_spectrum(double a, double b, Bc bc, std::size_t count) {
    if (!(a >= b && b > 0)) throw std::invalid_argument("rect_spectrum: requires a >= b > 0");
    if (count == 0) return {};
    const int lo = (bc == Bc::dirichlet) ? 1 : 0;
    std::vector<double> vals;
    double cutoff = pi_sq() * (1.0 / (a * a) + 1.0 / (b * b)) *
                    static_cast<double>((count + 1) * (count + 1));
    while (true) {
        vals.clear();
        const int mmax = static_cast<int>(std::ceil(a / kPi * std::sqrt(cutoff))) + 1;
        const int nmax = static_cast<int>(std::ceil(b / kPi * std::sqrt(cutoff))) + 1;
        for (int m = lo; m <= mmax; ++m)
            for (int n = lo; n <= nmax; ++n) {
                const double v = pi_sq() * (m * m / (a * a) + n * n / (b * b));
                if (v <= cutoff) vals.push_back(v);
            }
        if (vals.size() >= count) break;
        cutoff *= 2;
    }
    std::sort(vals.begin(), vals.end());
    vals.resize(count);
    return vals;
}

struct LaplacianOptions {
    int k = 1;
    double tol = 1e-10;
    bool extrapolate = true;     ///< also solve at 2h for a Richardson estimate
    bool t_sensitivity = false;  ///< also solve at T+1 (ported domains only)
};

/// FEM eigenvalues of the Laplacian on a preset-style domain: truncate the
/// ports at length T, triangulate at h, assemble with the requested boundary
/// condition and solve. Conforming P1 values are upper bounds of the
/// continuous eigenvalues on the truncated domain; the Richardson estimate
/// (4 lambda_h - lambda_2h)/3 is informative only and never drives verdicts.
inline EigenResult laplacian_eigs(const geometry::RectilinearDomain2D& dom, Bc bc, int k,
                                  double h, double T, const LaplacianOptions& opts_in = {}) {
    LaplacianOptions opts = opts_in;
    opts.k = k;
    const bool ported = !dom.ports.empty();
    const auto bcspec = (bc == Bc::dirichlet) ? fem2d::BcSpec::all_dirichlet()
                                              : fem2d::BcSpec::all_neumann();
    auto solve_at = [&](double hh, double TT) {
        const auto d = ported ? geometry::with_port_length(dom, TT) : dom;
        const auto mesh = geometry::triangulate(d, hh);
        auto sys = fem2d::assemble(mesh, bcspec);
        eigensolve::EigenOptions eo;
        eo.k = opts.k;
        eo.tol = opts.tol;
        eo.deflate_constants = (bc == Bc::neumann);
        auto r = eigensolve::smallest_eigenpairs(sys.K, sys.M, eo);
        r.h = hh;
        r.T = ported ? TT : 0;
        r.bc = bcspec.name();
        return r;
    };

    EigenResult fine = solve_at(h, T);
    if (opts.extrapolate) {
        bool coarse_ok = true;
        EigenResult coarse;
        try {
            coarse = solve_at(2 * h, T);
        } catch (const std::invalid_argument&) {
            coarse_ok = false;  // 2h does not align with the geometry
        }
        if (coarse_ok) {
            fine.extrapolated.resize(fine.eigenvalues.size());
            for (std::size_t i = 0; i < fine.eigenvalues.size(); ++i)
                fine.extrapolated[i] = (4 * fine.eigenvalues[i] - coarse.eigenvalues[i]) / 3.0;
        }
    }
    if (ported && opts.t_sensitivity) {
        const EigenResult longer = solve_at(h, T + 1);
        fine.t_sensitivity = 0;
        for (std::size_t i = 0; i < fine.eigenvalues.size(); ++i)
            fine.t_sensitivity = std::max(fine.t_sensitivity,
                                          std::abs(fine.eigenvalues[i] - longer.eigenvalues[i]));
    }
    return fine;
}

/// Eigen solve that keeps the mesh, dof map and eigenvectors so discrete
/// eigenfunctions can be evaluated afterwards.
struct EigenFieldSolve {
    std::shared_ptr<geometry::TriMesh> mesh;
    fem2d::DofMap dofs;
    EigenResult result;

    /// i-th eigenfunction as a nodal FE function (0 on constrained nodes).
    fem2d::FEFunction eigenfunction(int i) const {
        std::vector<double> vals(mesh->nodes.size(), 0.0);
        for (std::size_t n = 0; n < vals.size(); ++n) {
            const int d = dofs.node_to_dof[n];
            if (d >= 0) vals[n] = result.eigenvectors(d, i);
        }
        return {mesh.get(), std::move(vals)};
    }
};

inline EigenFieldSolve laplacian_eigenfunctions(const geometry::RectilinearDomain2D& dom, Bc bc,
                                                int k, double h, double T, double tol = 1e-10) {
    EigenFieldSolve out;
    const auto d = dom.ports.empty() ? dom : geometry::with_port_length(dom, T);
    out.mesh = std::make_shared<geometry::TriMesh>(geometry::triangulate(d, h));
    auto sys = fem2d::assemble(*out.mesh, bc == Bc::dirichlet ? fem2d::BcSpec::all_dirichlet()
                                                              : fem2d::BcSpec::all_neumann());
    eigensolve::EigenOptions eo;
    eo.k = k;
    eo.tol = tol;
    eo.deflate_constants = (bc == Bc::neumann);
    out.result = eigensolve::smallest_eigenpairs(sys.K, sys.M, eo);
    out.result.h = h;
    out.result.T = dom.ports.empty() ? 0 : T;
    out.dofs = std::move(sys.dofs);
    return out;
}

/// Threshold of the essential spectrum for branches with the given
/// cross-sections: 0 as soon as one section is not simply connected,
/// otherwise the minimum of the TE cutoffs.
inline EssentialSpectrum essential_threshold(const std::vector<CrossSection>& sections) {
    if (sections.empty()) throw std::invalid_argument("essential_threshold: empty section list");
    for (const auto& s : sections)
        if (!s.simply_connected) return {0.0};
    double t = std::numeric_limits<double>::infinity();
    for (const auto& s : sections) {
        if (!(s.lambda_N > 0))
            throw std::invalid_argument("essential_threshold: section '" + s.name +
                                        "' has no positive lambda_N");
        t = std::min(t, s.lambda_N);
    }
    return {t};
}

/// Point-spectrum classification: discrete strictly below the threshold,
/// embedded at or above it. No tolerance here; uncertainty handling lives in
/// the certificates.
inline SpectralClass classify_eigenvalue(double lambda, const EssentialSpectrum& ess) {
    if (lambda < 0) throw std::invalid_argument("classify_eigenvalue: lambda must be >= 0");
    return lambda < ess.threshold ? SpectralClass::discrete : SpectralClass::embedded;
}

struct ProductEigenvalue {
    double value = 0;
    int m = 0;
    char family = 'D';  ///< 'D': 2D Dirichlet + interval Neumann, 'N': the converse
    SpectralClass cls = SpectralClass::embedded;
};

/// Eigenvalues of the product waveguide (0,a) x Omega_2D below `cutoff`:
/// { lam_D(Omega_2D) + (m pi/a)^2, m >= 0 } merged with
/// { lam_N(Omega_2D) + (m pi/a)^2, m >= 1 } (the m = 0 Neumann combination
/// yields a null field). Classification is against min(pi^2/H_max^2,
/// pi^2/a^2), with the largest strip height H_max supplied explicitly.
inline std::vector<ProductEigenvalue> product_spectrum(double a,
                                                       const std::vector<double>& eigs2d_dirichlet,
                                                       const std::vector<double>& eigs2d_neumann,
                                                       double cutoff, double h_max) {
    if (!(a > 0)) throw std::invalid_argument("product_spectrum: a must be > 0");
    if (!(h_max > 0)) throw std::invalid_argument("product_spectrum: H_max must be > 0");
    const EssentialSpectrum ess{std::min(pi_sq() / (h_max * h_max), pi_sq() / (a * a))};
    std::vector<ProductEigenvalue> out;
    auto emit = [&](const std::vector<double>& base, int m0, char fam) {
        for (double lam : base) {
            for (int m = m0;; ++m) {
                const double v = lam + m * m * pi_sq() / (a * a);
                if (v > cutoff) break;
                out.push_back({v, m, fam, classify_eigenvalue(v, ess)});
            }
        }
    };
    emit(eigs2d_dirichlet, 0, 'D');
    emit(eigs2d_neumann, 1, 'N');
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.value != y.value) return x.value < y.value;
        if (x.family != y.family) return x.family < y.family;
        return x.m < y.m;
    });
    return out;
}

struct FilonovReport {
    bool ok = false;
    double margin = 0;  ///< lambda_D - lambda_N > 0
    std::optional<double> second_margin;  ///< lambda_D - lambda_N2 when available
};

/// Asserts lambda_N < lambda_D (and, when the second positive Neumann
/// eigenvalue is recorded, lambda_N2 < lambda_D as well). A violation can
/// only come from a broken solver, so it is a hard failure.
inline FilonovReport filonov_check(const CrossSection& s) {
    if (!(s.lambda_N > 0) || !(s.lambda_D > 0))
        throw std::invalid_argument("filonov_check: lambda_N and lambda_D must be populated");
    FilonovReport r;
    r.margin = s.lambda_D - s.lambda_N;
    r.ok = r.margin > 0;
    if (s.lambda_N2) {
        r.second_margin = s.lambda_D - *s.lambda_N2;
        r.ok = r.ok && *r.second_margin > 0;
    }
    if (!r.ok)
        throw std::logic_error("filonov_check: lambda_N >= lambda_D on section '" + s.name +
                               "', eigenvalue solver is broken");
    return r;
}

/// First positive Neumann eigenvalue of a disk of radius R: the square of
/// (first positive zero of J1') / R, found by a bracketing root finder so
/// disk resonators need no curved meshing. Tabulated provenance.
inline double disk_neumann_lambda(double radius = 1.0) {
    if (!(radius > 0)) throw std::invalid_argument("disk_neumann_lambda: radius must be > 0");
    auto j1p = [](double x) {
        return std::cyl_bessel_j(0, x) - std::cyl_bessel_j(1, x) / x;
    };
    auto j1pp = [](double x) {
        // from the Bessel equation: J1'' = -J1'/x - (1 - 1/x^2) J1
        const double j1 = std::cyl_bessel_j(1, x);
        const double d = std::cyl_bessel_j(0, x) - j1 / x;
        return -d / x - (1.0 - 1.0 / (x * x)) * j1;
    };
    const double z = find_root_bracketed(j1p, 1.5, 2.5, j1pp);
    return (z / radius) * (z / radius);
}

/// Analytic rectangle cross-section (a >= b > 0).
inline CrossSection rect_section(double a, double b) {
    CrossSection s;
    s.name = "rect_" + format_double(a) + "x" + format_double(b);
    const auto n = rect_spectrum(a, b, Bc::neumann, 3);
    s.lambda_N = n[1];  // skip the zero mode
    s.lambda_N2 = n[2];
    s.lambda_D = rect_spectrum(a, b, Bc::dirichlet, 1)[0];
    return s;
}

/// Disk cross-section with the tabulated TE cutoff and the analytic TM
/// cutoff (square of the first zero of J0 over R).
inline CrossSection disk_section(double radius) {
    CrossSection s;
    s.name = "disk_" + format_double(radius);
    s.lambda_N = disk_neumann_lambda(radius);
    s.provenance_N = "tabulated";
    auto j0 = [](double x) { return std::cyl_bessel_j(0, x); };
    auto j0p = [](double x) { return -std::cyl_bessel_j(1, x); };
    const double z0 = find_root_bracketed(j0, 2.0, 3.0, j0p);
    s.lambda_D = (z0 / radius) * (z0 / radius);
    s.provenance_D = "tabulated";
    return s;
}

/// FEM cross-section of an arbitrary bounded preset domain.
inline CrossSection fem_section(const geometry::RectilinearDomain2D& dom, double h,
                                double tol = 1e-10) {
    CrossSection s;
    s.name = dom.name + "_fem";
    s.simply_connected = dom.simply_connected;
    LaplacianOptions lo;
    lo.tol = tol;
    lo.extrapolate = false;
    const auto rn = laplacian_eigs(dom, Bc::neumann, 2, h, 4.0, lo);
    const auto rd = laplacian_eigs(dom, Bc::dirichlet, 1, h, 4.0, lo);
    s.lambda_N = rn.eigenvalues[0];
    s.lambda_N2 = rn.eigenvalues[1];
    s.lambda_D = rd.eigenvalues[0];
    s.provenance_N = s.provenance_D = "fem";
    return s;
}

}  // namespace tmcert::spectra
