#pragma once

#include "skelsc/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace skelsc {

enum class Solver { lsr, ssc_admm, ssc_omp, ensc };

/// Hyperparameters shared by the self-expressive solvers. Unset optionals
/// are filled from the data by `resolve_*` helpers below.
struct SolverParams {
    std::optional<double> lambda;  // regularization weight
    std::optional<double> rho;     // ADMM penalty
    double alpha = 20.0;           // self-tuning factor for the L1 weight
    int max_iter = 200;
    double tol = 1e-6;
    std::optional<int> omp_sparsity;
    double ensc_mix = 0.9;  // weight of the L1 part in EnSC
};

/// Coefficient matrix C (N x N, zero diagonal) with solver diagnostics.
struct CoefficientResult {
    Matrix coeffs;
    bool converged = true;
    int iterations = 0;
    double residual = 0.0;  // ||X - X C||_F
    // ADMM: max(primal, dual) residual per iteration.
    std::vector<double> trace;
    // EnSC: objective of each column's subproblem after every sweep.
    std::vector<std::vector<double>> column_objectives;
};

namespace detail {

inline void check_features(const Matrix& X, const char* who) {
    if (X.cols() < 2) throw ParameterError(std::string(who) + ": need at least two samples");
    if (!X.allFinite()) throw ParameterError(std::string(who) + ": non-finite feature");
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

inline double reconstruction_residual(const Matrix& X, const Matrix& C) { return (X - X * C).norm(); }

}  // namespace detail

/// min_j max_{i != j} |x_i^T x_j| over nonzero columns; the smallest L1
/// weight scale for which no column's coefficients are all shrunk to zero.
inline double min_max_correlation(const Matrix& X) {
    const Matrix G = (X.transpose() * X).cwiseAbs();
    double mu = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < G.cols(); ++j) {
        if (G(j, j) == 0.0) continue;
        double best = 0.0;
        for (Index i = 0; i < G.rows(); ++i)
            if (i != j) best = std::max(best, G(i, j));
        mu = std::min(mu, best);
    }
    return std::isfinite(mu) ? mu : 0.0;
}

/// L1 weight for SSC-ADMM / EnSC: mu / alpha, i.e. the data term carries
/// weight alpha / mu relative to a unit L1 norm.
inline double resolve_l1_lambda(const Matrix& X, const SolverParams& p) {
    if (p.lambda) return *p.lambda;
    const double mu = min_max_correlation(X);
    return mu > 0.0 ? mu / p.alpha : 1.0 / p.alpha;
}

inline double resolve_lsr_lambda(const Matrix& X, const SolverParams& p) {
    if (p.lambda) return *p.lambda;
    const double lam = 0.1 * X.squaredNorm() / static_cast<double>(X.cols());
    return lam > 0.0 ? lam : 0.1;
}

/// Least-squares regression with diag(C) = 0, closed form.
///
/// Column j minimizes ||x_j - X c||^2 + lambda ||c||^2 subject to c_j = 0,
/// whose solution is c_i = -Zt(i,j) / Zt(j,j) with Zt = (X^T X + lambda I)^-1.
inline CoefficientResult solve_lsr(const Matrix& X, const SolverParams& params = {}) {
    detail::check_features(X, "solve_lsr");
    const double lambda = resolve_lsr_lambda(X, params);
    if (!(lambda > 0.0)) throw ParameterError("solve_lsr: lambda must be positive");
    const Index N = X.cols();
    Matrix gram = X.transpose() * X;
    gram.diagonal().array() += lambda;
    const Matrix Zt = gram.llt().solve(Matrix::Identity(N, N));
    Matrix C(N, N);
    for (Index j = 0; j < N; ++j) {
        C.col(j) = -Zt.col(j) / Zt(j, j);
        C(j, j) = 0.0;
    }
    CoefficientResult r;
    r.residual = detail::reconstruction_residual(X, C);
    r.coeffs = std::move(C);
    return r;
}

/// Sparse subspace clustering, lambda ||C||_1 + 1/2 ||X - XC||_F^2 with
/// diag(C) = 0, solved by ADMM on the split Z = C.
///
/// Z-step minimizes 1/2 ||X - XZ||^2 + rho/2 ||Z - C + U||^2 exactly under
/// diag(Z) = 0: with A = X^T X + rho I and W = A^-1 (X^T X + rho (C - U)),
/// column j is W_j - (W_jj / A^-1_jj) A^-1 e_j. C-step soft-thresholds
/// Z + U at lambda / rho with a zero diagonal; U accumulates Z - C. Stops
/// when both the primal residual max|Z - C| and dual residual
/// max|C - C_prev| fall below tol.
inline CoefficientResult solve_ssc_admm(const Matrix& X, const SolverParams& params = {}) {
    detail::check_features(X, "solve_ssc_admm");
    const double lambda = resolve_l1_lambda(X, params);
    if (!(lambda > 0.0)) throw ParameterError("solve_ssc_admm: lambda must be positive");
    const double rho = params.rho.value_or(params.alpha * lambda);
    if (!(rho > 0.0)) throw ParameterError("solve_ssc_admm: rho must be positive");
    if (params.max_iter < 1 || !(params.tol > 0.0)) throw ParameterError("solve_ssc_admm: bad iteration controls");

    const Index N = X.cols();
    const Matrix gram = X.transpose() * X;
    Matrix system = gram;
    system.diagonal().array() += rho;
    const Eigen::LLT<Matrix> chol(system);
    if (chol.info() != Eigen::Success) throw NumericalError("solve_ssc_admm: factorization failed");
    const Matrix inv = chol.solve(Matrix::Identity(N, N));
    const Vector inv_diag = inv.diagonal();

    Matrix C = Matrix::Zero(N, N);
    Matrix U = Matrix::Zero(N, N);
    Matrix Z(N, N);
    CoefficientResult r;
    r.converged = false;
    const double thr = lambda / rho;
    for (int it = 1; it <= params.max_iter; ++it) {
        Z = inv * (gram + rho * (C - U));
        const Vector scale = Z.diagonal().cwiseQuotient(inv_diag);
        Z -= inv * scale.asDiagonal();
        Z.diagonal().setZero();
        Matrix C_next = (Z + U).unaryExpr([thr](double v) { return detail::soft_threshold(v, thr); });
        C_next.diagonal().setZero();
        U += Z - C_next;
        const double primal = (Z - C_next).cwiseAbs().maxCoeff();
        const double dual = (C_next - C).cwiseAbs().maxCoeff();
        C = std::move(C_next);
        r.trace.push_back(std::max(primal, dual));
        r.iterations = it;
        if (primal < params.tol && dual < params.tol) {
            r.converged = true;
            break;
        }
    }
    r.residual = detail::reconstruction_residual(X, C);
    r.coeffs = std::move(C);
    return r;
}

/// Sparse subspace clustering by orthogonal matching pursuit.
///
/// Columns are scaled to unit norm first. For each column, up to k_max
/// other columns are picked greedily by |correlation| with the residual
/// (ties go to the lowest index), refitting by least squares on the support
/// after every pick. Pursuit stops early once the residual norm is below tol
/// or no remaining column correlates with the residual.
inline CoefficientResult solve_ssc_omp(const Matrix& X, const SolverParams& params = {}) {
    detail::check_features(X, "solve_ssc_omp");
    const Index N = X.cols();
    const int k_max = params.omp_sparsity.value_or(static_cast<int>(std::min<Index>(10, N - 1)));
    if (k_max < 1) throw ParameterError("solve_ssc_omp: sparsity must be positive");

    Matrix Xn = X;
    for (Index j = 0; j < N; ++j) {
        const double n = Xn.col(j).norm();
        if (n == 0.0) throw ParameterError("solve_ssc_omp: column " + std::to_string(j) + " is zero");
        Xn.col(j) /= n;
    }

    Matrix C = Matrix::Zero(N, N);
    CoefficientResult r;
    for (Index j = 0; j < N; ++j) {
        const Vector x = Xn.col(j);
        Vector residual = x;
        std::vector<Index> support;
        std::vector<char> used(static_cast<std::size_t>(N), 0);
        used[static_cast<std::size_t>(j)] = 1;
        Vector coef;
        while (static_cast<int>(support.size()) < k_max && residual.norm() >= params.tol) {
            const Vector corr = (Xn.transpose() * residual).cwiseAbs();
            Index best = -1;
            double best_val = 0.0;
            for (Index i = 0; i < N; ++i)
                if (!used[static_cast<std::size_t>(i)] && corr(i) > best_val) {
                    best_val = corr(i);
                    best = i;
                }
            if (best < 0 || best_val <= 1e-14) break;
            used[static_cast<std::size_t>(best)] = 1;
            support.push_back(best);
            Matrix A(Xn.rows(), static_cast<Index>(support.size()));
            for (std::size_t s = 0; s < support.size(); ++s) A.col(static_cast<Index>(s)) = Xn.col(support[s]);
            coef = A.colPivHouseholderQr().solve(x);
            residual = x - A * coef;
        }
        for (std::size_t s = 0; s < support.size(); ++s) C(support[s], j) = coef(static_cast<Index>(s));
        r.iterations = std::max(r.iterations, static_cast<int>(support.size()));
    }
    r.residual = detail::reconstruction_residual(Xn, C);
    r.coeffs = std::move(C);
    return r;
}

/// Elastic-net subspace clustering by cyclic coordinate descent.
///
/// Column j minimizes
///   lambda [ mix ||c||_1 + (1 - mix)/2 ||c||_2^2 ] + 1/2 ||x_j - X_{-j} c||^2.
/// Coordinate update: c_i = S(g_i, lambda mix) / (||x_i||^2 + lambda (1 - mix))
/// where g_i is the correlation of x_i with the partial residual. A column
/// converges when the largest coordinate change in a sweep is below tol.
inline CoefficientResult solve_ensc(const Matrix& X, const SolverParams& params = {}) {
    detail::check_features(X, "solve_ensc");
    const double mix = params.ensc_mix;
    if (!(mix > 0.0 && mix <= 1.0)) throw ParameterError("solve_ensc: ensc_mix must lie in (0, 1]");
    const double lambda = resolve_l1_lambda(X, params);
    if (!(lambda > 0.0)) throw ParameterError("solve_ensc: lambda must be positive");
    if (params.max_iter < 1 || !(params.tol > 0.0)) throw ParameterError("solve_ensc: bad iteration controls");

    const Index N = X.cols();
    const Matrix gram = X.transpose() * X;
    const double l1 = lambda * mix;
    const double l2 = lambda * (1.0 - mix);

    Matrix C = Matrix::Zero(N, N);
    CoefficientResult r;
    r.column_objectives.resize(static_cast<std::size_t>(N));
    for (Index j = 0; j < N; ++j) {
        // Coordinate descent in Gram form: g_i = (X^T x_j)_i - (G c)_i + G_ii c_i.
        Vector c = Vector::Zero(N);
        Vector Gc = Vector::Zero(N);
        bool col_converged = false;
        int sweep = 0;
        for (; sweep < params.max_iter; ++sweep) {
            double max_change = 0.0;
            for (Index i = 0; i < N; ++i) {
                if (i == j || gram(i, i) == 0.0) continue;
                const double g = gram(i, j) - Gc(i) + gram(i, i) * c(i);
                const double next = detail::soft_threshold(g, l1) / (gram(i, i) + l2);
                const double delta = next - c(i);
                if (delta != 0.0) {
                    Gc += delta * gram.col(i);
                    c(i) = next;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            // 1/2 ||x - Xc||^2 = 1/2 (G_jj - 2 c^T G e_j + c^T G c)
            const double fit = 0.5 * (gram(j, j) - 2.0 * c.dot(gram.col(j)) + c.dot(Gc));
            const double obj = fit + l1 * c.lpNorm<1>() + 0.5 * l2 * c.squaredNorm();
            r.column_objectives[static_cast<std::size_t>(j)].push_back(obj);
            if (max_change < params.tol) {
                col_converged = true;
                ++sweep;
                break;
            }
        }
        if (!col_converged) r.converged = false;
        r.iterations = std::max(r.iterations, sweep);
        C.col(j) = c;
    }
    r.residual = detail::reconstruction_residual(X, C);
    r.coeffs = std::move(C);
    return r;
}

inline CoefficientResult solve_self_expressive(Solver solver, const Matrix& X, const SolverParams& params = {}) {
    switch (solver) {
        case Solver::lsr: return solve_lsr(X, params);
        case Solver::ssc_admm: return solve_ssc_admm(X, params);
        case Solver::ssc_omp: return solve_ssc_omp(X, params);
        case Solver::ensc: return solve_ensc(X, params);
    }
    throw ParameterError("unknown solver");
}

/// Per-row z-scoring of a D x N feature matrix. Constant rows become zero.
inline Matrix standardize_rows(const Matrix& X) {
    Matrix out(X.rows(), X.cols());
    const double n = static_cast<double>(X.cols());
    for (Index d = 0; d < X.rows(); ++d) {
        const double mean = X.row(d).sum() / n;
        const Eigen::RowVectorXd centered = X.row(d).array() - mean;
        const double sd = std::sqrt(centered.squaredNorm() / n);
        if (sd > 1e-12 * (1.0 + std::abs(mean)))
            out.row(d) = centered / sd;
        else
            out.row(d).setZero();
    }
    return out;
}

}  // namespace skelsc
