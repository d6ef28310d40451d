#pragma once

// Smallest eigenpairs of the symmetric generalized pencil (K, M) by
// shift-invert block subspace iteration, plus the weighted 1D eigenproblem
// used as an independent cross-check for the transcendental root kappa(a).
//
// The iteration factorizes K + sigma*M once (sigma > 0 regularizes the
// singular Neumann stiffness), applies the inverse to M-weighted blocks,
// M-orthonormalizes and extracts Ritz pairs from the projected pencil.
// Start vectors come from a fixed-seed generator, so results are
// deterministic for identical inputs.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmcert/fem2d.hpp"
#include "tmcert/numerics.hpp"

namespace tmcert::eigensolve {

struct EigenOptions {
    int k = 1;
    double tol = 1e-10;            ///< relative residual target
    bool deflate_constants = false;  ///< project out the constant vector (Neumann)
    int max_iter_factor = 500;     ///< iteration budget is max_iter_factor * k
};

struct EigenResult {
    std::vector<double> eigenvalues;  ///< ascending
    Eigen::MatrixXd eigenvectors;     ///< M-orthonormal columns on free dofs
    std::string bc;
    std::vector<double> residuals;  ///< ||K v - lambda M v|| / ||K v||
    double h = 0;
    double T = 0;
    std::vector<double> extrapolated;  ///< Richardson estimates, empty if unavailable
    double t_sensitivity = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
};

/// k smallest eigenpairs of K v = lambda M v on the free dofs.
/// Throws on factorization failure or when the iteration budget is exhausted
/// before reaching the residual tolerance.
inline EigenResult smallest_eigenpairs(const fem2d::SymSparse& K, const fem2d::SymSparse& M,
                                       const EigenOptions& opts = {}) {
    if (opts.k < 1) throw std::invalid_argument("smallest_eigenpairs: k must be >= 1");
    const int n = K.n;
    if (n < 1 || M.n != n) throw std::invalid_argument("smallest_eigenpairs: bad pencil dimensions");

    const Eigen::SparseMatrix<double> Kl = K.to_sparse();
    const Eigen::SparseMatrix<double> Ml = M.to_sparse();
    const double mtrace = M.trace();
    const double sigma = 1e-8 * (mtrace > 0 ? K.trace() / mtrace : 1.0) + 1e-300;

    Eigen::SparseMatrix<double> A = Kl + sigma * Ml;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("smallest_eigenpairs: factorization of K + sigma*M failed");

    const auto Ksym = Kl.selfadjointView<Eigen::Lower>();
    const auto Msym = Ml.selfadjointView<Eigen::Lower>();

    Eigen::VectorXd ones_m;  // M * 1, for constant deflation
    double ones_m_norm = 0;
    if (opts.deflate_constants) {
        ones_m = Msym * Eigen::VectorXd::Ones(n);
        ones_m_norm = ones_m.sum();  // 1^T M 1
    }
    auto deflate = [&](Eigen::MatrixXd& X) {
        if (!opts.deflate_constants) return;
        for (int j = 0; j < X.cols(); ++j) {
            const double c = ones_m.dot(X.col(j)) / ones_m_norm;
            X.col(j).array() -= c;
        }
    };

    const int p = std::min(n, std::max(opts.k + 6, 2 * opts.k));
    DetRng rng(0x5DEECE66Dull);
    Eigen::MatrixXd X(n, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) X(i, j) = rng.uniform(-1.0, 1.0);
    deflate(X);

    const int budget = opts.max_iter_factor * opts.k;
    Eigen::VectorXd prev = Eigen::VectorXd::Constant(opts.k, std::numeric_limits<double>::infinity());
    EigenResult res;
    res.bc = "";

    for (int it = 1; it <= budget; ++it) {
        Eigen::MatrixXd Y = solver.solve(Msym * X);
        deflate(Y);

        // M-orthonormalize the block
        Eigen::MatrixXd G = Y.transpose() * (Msym * Y);
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success) {
            // near-dependent block: refresh the trailing columns and retry
            for (int j = p / 2; j < p; ++j)
                for (int i = 0; i < n; ++i) Y(i, j) = rng.uniform(-1.0, 1.0);
            deflate(Y);
            G = Y.transpose() * (Msym * Y);
            llt.compute(G);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("smallest_eigenpairs: block orthonormalization failed");
        }
        llt.matrixU().solveInPlace<Eigen::OnTheRight>(Y);

        const Eigen::MatrixXd KY = Ksym * Y;
        const Eigen::MatrixXd Hk = Y.transpose() * KY;
        const Eigen::MatrixXd Hm = Y.transpose() * (Msym * Y);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Hk, Hm);
        if (ges.info() != Eigen::Success)
            throw std::runtime_error("smallest_eigenpairs: projected eigensolve failed");
        X = Y * ges.eigenvectors();
        const Eigen::VectorXd vals = ges.eigenvalues();

        bool done = true;
        std::vector<double> resid(opts.k);
        for (int j = 0; j < opts.k && done; ++j) {
            if (std::abs(vals[j] - prev[j]) > opts.tol * (1.0 + std::abs(vals[j])) * 10) done = false;
        }
        if (done) {
            for (int j = 0; j < opts.k; ++j) {
                const Eigen::VectorXd kx = Ksym * X.col(j);
                const Eigen::VectorXd mx = Msym * X.col(j);
                resid[j] = (kx - vals[j] * mx).norm() / std::max(kx.norm(), 1e-300);
                if (resid[j] > opts.tol) done = false;
            }
        }
        prev = vals.head(opts.k);
        if (done) {
            res.eigenvalues.assign(vals.data(), vals.data() + opts.k);
            res.eigenvectors = X.leftCols(opts.k);
            res.residuals = std::move(resid);
            res.iterations = it;
            return res;
        }
    }
    throw std::runtime_error("smallest_eigenpairs: no convergence within " +
                             std::to_string(budget) + " iterations (k=" +
                             std::to_string(opts.k) + ")");
}

/// Smallest positive eigenvalue of the weighted 1D problem
///   -u'' + a^2 1_(1/2,T) u = lambda 1_(0,1/2) u,  u'(0) = 0, u(T) = 0,
/// discretized with P1 elements and solved through the shifted pencil
/// (K + a^2 M_right, M_left); the mass weight on the right-hand side is the
/// indicator of (0,1/2). The subinterval (1/2,T) is graded near 1/2 so steep
/// boundary layers at large a stay resolved.
inline double fem1d_weighted_eigs(double a, double T, double h) {
    if (!(a > 0)) throw std::invalid_argument("fem1d_weighted_eigs: a must be > 0");
    if (!(T > 0.5)) throw std::invalid_argument("fem1d_weighted_eigs: T must be > 1/2");
    if (!(h > 0)) throw std::invalid_argument("fem1d_weighted_eigs: h must be > 0");

    std::vector<double> x;  // node coordinates
    const long m = std::max<long>(2, std::lround(0.5 / h));
    for (long i = 0; i <= m; ++i) x.push_back(0.5 * static_cast<double>(i) / static_cast<double>(m));
    double w = std::min(h, 0.25 / a);
    double t = 0.5;
    while (t < T - 1e-12) {
        t = std::min(t + w, T);
        x.push_back(t);
        w = std::min(h, w * 1.3);
    }
    const int n_nodes = static_cast<int>(x.size());
    const int n = n_nodes - 1;  // Dirichlet at T drops the last node
    if (n < 3) throw std::invalid_argument("fem1d_weighted_eigs: degenerate discretization");

    std::vector<double> Ad(n, 0.0), Ao(n - 1, 0.0), Bd(n, 0.0), Bo(n - 1, 0.0);
    for (int e = 0; e + 1 < n_nodes; ++e) {
        const double le = x[e + 1] - x[e];
        const bool left = 0.5 * (x[e] + x[e + 1]) < 0.5;
        const double k = 1.0 / le, mm = le / 6.0;
        auto add = [&](int i, int j, double kv, double mv) {
            if (i >= n || j >= n) return;
            if (i == j) {
                Ad[i] += kv;
                if (left) Bd[i] += mv; else Ad[i] += a * a * mv;
            } else {
                Ao[std::min(i, j)] += kv;
                if (left) Bo[std::min(i, j)] += mv; else Ao[std::min(i, j)] += a * a * mv;
            }
        };
        add(e, e, k, 2 * mm);
        add(e + 1, e + 1, k, 2 * mm);
        add(e, e + 1, -k, mm);
    }

    // Thomas factorization of the SPD tridiagonal A
    std::vector<double> d(n), l(n - 1);
    d[0] = Ad[0];
    for (int i = 1; i < n; ++i) {
        l[i - 1] = Ao[i - 1] / d[i - 1];
        d[i] = Ad[i] - l[i - 1] * Ao[i - 1];
        if (!(d[i] > 0)) throw std::runtime_error("fem1d_weighted_eigs: factorization failed");
    }
    auto solveA = [&](std::vector<double> b) {
        for (int i = 1; i < n; ++i) b[i] -= l[i - 1] * b[i - 1];
        for (int i = 0; i < n; ++i) b[i] /= d[i];
        for (int i = n - 2; i >= 0; --i) b[i] -= l[i] * b[i + 1];
        return b;
    };
    auto mulTri = [&](const std::vector<double>& dd, const std::vector<double>& oo,
                      const std::vector<double>& v) {
        std::vector<double> r(n, 0.0);
        for (int i = 0; i < n; ++i) {
            r[i] = dd[i] * v[i];
            if (i > 0) r[i] += oo[i - 1] * v[i - 1];
            if (i + 1 < n) r[i] += oo[i] * v[i + 1];
        }
        return r;
    };
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        NeumaierSum s;
        for (int i = 0; i < n; ++i) s.add(u[i] * v[i]);
        return s.value();
    };

    // power iteration for the largest nu of B v = nu A v
    std::vector<double> v(n, 1.0);
    double nu = 0, nu_prev = -1;
    for (int it = 0; it < 400; ++it) {
        auto bv = mulTri(Bd, Bo, v);
        auto y = solveA(bv);
        const double scale = std::sqrt(std::max(dot(y, y), 1e-300));
        for (auto& yi : y) yi /= scale;
        v = std::move(y);
        const auto av = mulTri(Ad, Ao, v);
        const auto bv2 = mulTri(Bd, Bo, v);
        nu = dot(v, bv2) / dot(v, av);
        if (std::abs(nu - nu_prev) <= 1e-15 * std::abs(nu)) break;
        nu_prev = nu;
    }
    if (!(nu > 0)) throw std::runtime_error("fem1d_weighted_eigs: iteration produced nu <= 0");
    // A v = (1/nu) B v with the a^2 weight carried on the right subinterval
    // only, so 1/nu is the sought eigenvalue itself.
    return 1.0 / nu;
}

}  // namespace tmcert::eigensolve
