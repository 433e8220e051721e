#pragma once

#include "skelsc/common.hpp"
#include "skelsc/graph_clustering.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace skelsc {

enum class DictionaryUpdate { projected_gradient, multiplicative };

struct TscParams {
    std::optional<int> atoms;  // r; defaults to min(ceil(n/4), 50)
    double lambda1 = 0.01;     // ||Z||_F^2 weight
    double lambda2 = 15.0;     // temporal Laplacian weight
    int neighbor_window = 3;   // s
    int max_iter = 200;
    double tol = 1e-6;
    std::uint64_t rng_seed = 0;
    int admm_iter = 50;        // inner iterations of the code update
    int dictionary_iter = 10;  // inner iterations of the dictionary update
    DictionaryUpdate dictionary_update = DictionaryUpdate::projected_gradient;

    int resolved_atoms(Index n) const {
        return atoms.value_or(static_cast<int>(std::min<Index>((n + 3) / 4, 50)));
    }

    void validate(Index n) const {
        const int r = resolved_atoms(n);
        if (r < 1) throw ParameterError("tsc: dictionary size must be positive");
        if (r > n) throw ParameterError("tsc: dictionary size " + std::to_string(r) + " exceeds sample count " + std::to_string(n));
        if (neighbor_window < 1) throw ParameterError("tsc: neighbor window must be positive");
        if (lambda1 < 0.0 || lambda2 < 0.0) throw ParameterError("tsc: regularization weights must be non-negative");
        if (max_iter < 1 || !(tol > 0.0) || admm_iter < 1 || dictionary_iter < 1)
            throw ParameterError("tsc: bad iteration controls");
    }
};

struct TscModel {
    Matrix dictionary;  // d x r, entrywise >= 0, atoms of norm <= 1
    Matrix codes;       // r x n, entrywise >= 0
    std::vector<double> objective_trace;
    double shift = 0.0;  // amount subtracted from X to make it nonnegative
    int iterations = 0;
    bool converged = false;
};

/// Laplacian of the graph linking every index to the ones within distance
/// `window` (unit weights): L = Deg - A.
inline Matrix build_temporal_laplacian(Index n, Index window) {
    if (n < 2) throw ParameterError("build_temporal_laplacian: need n >= 2");
    if (window < 1) throw ParameterError("build_temporal_laplacian: window must be positive");
    Matrix L = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = std::max<Index>(0, i - window); j <= std::min(n - 1, i + window); ++j)
            if (j != i) {
                L(i, j) = -1.0;
                L(i, i) += 1.0;
            }
    return L;
}

/// ||X - DZ||_F^2 + lambda1 ||Z||_F^2 + lambda2 tr(Z L Z^T)
inline double tsc_objective(const Matrix& X, const Matrix& D, const Matrix& Z, const Matrix& L, double lambda1,
                            double lambda2) {
    return (X - D * Z).squaredNorm() + lambda1 * Z.squaredNorm() + lambda2 * (Z * L).cwiseProduct(Z).sum();
}

namespace detail {

class TscCodeSolver {
public:
    TscCodeSolver(const Matrix& X, const Matrix& L, const TscParams& p)
        : X_(X), L_(L), p_(p), rho_(2.0 + 2.0 * p.lambda1) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
        if (eig.info() != Eigen::Success) throw NumericalError("tsc: Laplacian eigendecomposition failed");
        lap_vecs_ = eig.eigenvectors();
        lap_vals_ = eig.eigenvalues().cwiseMax(0.0);
        lap_norm_ = lap_vals_.maxCoeff();
    }

    double objective(const Matrix& D, const Matrix& Z) const { return tsc_objective(X_, D, Z, L_, p_.lambda1, p_.lambda2); }

    // ADMM on Z = V, V >= 0. The Z-update is the Sylvester equation
    //   (2 D^T D + (2 lambda1 + rho) I) Z + 2 lambda2 Z L = 2 D^T X + rho (V - U)
    // diagonalized in the eigenbases of both sides.
    Matrix admm(const Matrix& D, const Matrix& start) {
        const Index r = D.cols();
        const Index n = X_.cols();
        if (U_.rows() != r || U_.cols() != n) U_ = Matrix::Zero(r, n);
        Matrix A = 2.0 * D.transpose() * D;
        A.diagonal().array() += 2.0 * p_.lambda1 + rho_;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
        if (eig.info() != Eigen::Success) throw NumericalError("tsc: code system eigendecomposition failed");
        const Matrix& P = eig.eigenvectors();
        const Vector& sigma = eig.eigenvalues();
        Matrix denom(r, n);
        for (Index a = 0; a < r; ++a)
            for (Index b = 0; b < n; ++b) denom(a, b) = sigma(a) + 2.0 * p_.lambda2 * lap_vals_(b);
        const Matrix fixed = 2.0 * D.transpose() * X_;

        Matrix V = start;
        Matrix Z;
        for (int it = 0; it < p_.admm_iter; ++it) {
            const Matrix rhs = fixed + rho_ * (V - U_);
            const Matrix hat = (P.transpose() * rhs * lap_vecs_).cwiseQuotient(denom);
            Z = P * hat * lap_vecs_.transpose();
            V = (Z + U_).cwiseMax(0.0);
            U_ += Z - V;
        }
        return V;
    }

    // One projected-gradient step with step 1/Lipschitz: never increases the objective.
    Matrix gradient_step(const Matrix& D, const Matrix& Z) const {
        const Matrix DtD = D.transpose() * D;
        const double lip = 2.0 * spectral_norm(DtD) + 2.0 * p_.lambda1 + 2.0 * p_.lambda2 * lap_norm_;
        if (!(lip > 0.0)) return Z;
        const Matrix grad = 2.0 * (DtD * Z - D.transpose() * X_) + 2.0 * p_.lambda1 * Z + 2.0 * p_.lambda2 * Z * L_;
        return (Z - grad / lip).cwiseMax(0.0);
    }

    static double spectral_norm(const Matrix& sym) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
        return eig.eigenvalues().cwiseAbs().maxCoeff();
    }

private:
    const Matrix& X_;
    const Matrix& L_;
    const TscParams& p_;
    double rho_;
    Matrix lap_vecs_;
    Vector lap_vals_;
    double lap_norm_ = 0.0;
    Matrix U_;
};

// Euclidean projection onto {d >= 0, ||d|| <= 1}, column by column.
inline void project_atoms(Matrix& D) {
    D = D.cwiseMax(0.0);
    for (Index a = 0; a < D.cols(); ++a) {
        const double n = D.col(a).norm();
        if (n > 1.0) D.col(a) /= n;
    }
}

inline void dictionary_step(const Matrix& X, Matrix& D, const Matrix& Z, const TscParams& p, DictionaryUpdate kind) {
    const Matrix ZZt = Z * Z.transpose();
    const Matrix XZt = X * Z.transpose();
    if (kind == DictionaryUpdate::multiplicative) {
        for (int it = 0; it < p.dictionary_iter; ++it) {
            const Matrix denom = (D * ZZt).array() + 1e-12;
            D = D.cwiseProduct(XZt.cwiseQuotient(denom));
        }
        return;
    }
    const double lip = 2.0 * TscCodeSolver::spectral_norm(ZZt);
    if (!(lip > 0.0)) return;
    for (int it = 0; it < p.dictionary_iter; ++it) {
        D -= (2.0 * (D * ZZt - XZt)) / lip;
        project_atoms(D);
    }
}

// Rescale atoms to unit norm, moving the scale into the matching code row.
// Growing a short atom shrinks Z, which can only lower the objective; the
// multiplicative update may also produce long atoms, which are shrunk.
inline void normalize_atoms(Matrix& D, Matrix& Z, bool allow_shrink) {
    for (Index a = 0; a < D.cols(); ++a) {
        const double n = D.col(a).norm();
        if (n == 0.0 || n == 1.0 || (n > 1.0 && !allow_shrink)) continue;
        D.col(a) /= n;
        Z.row(a) *= n;
    }
}

}  // namespace detail

/// Temporal subspace clustering model: nonnegative dictionary learning
///   min ||X - DZ||_F^2 + lambda1 ||Z||_F^2 + lambda2 tr(Z L Z^T),  D, Z >= 0
/// with L the temporal Laplacian over the column order of X.
///
/// Alternates a code update (warm-started ADMM, safeguarded by a projected
/// gradient step so the objective never rises) with a dictionary update
/// (projected gradient onto nonnegative atoms of norm <= 1), then rescales
/// atoms to unit norm. X is shifted by its minimum when it has negative
/// entries.
inline TscModel solve_tsc(const Matrix& X_in, const TscParams& params) {
    if (X_in.cols() < 2) throw ParameterError("solve_tsc: need at least two samples");
    if (!X_in.allFinite()) throw ParameterError("solve_tsc: non-finite feature");
    const Index n = X_in.cols();
    const Index dim = X_in.rows();
    params.validate(n);
    const int r = params.resolved_atoms(n);

    TscModel model;
    model.shift = std::min(0.0, X_in.minCoeff());
    const Matrix X = X_in.array() - model.shift;
    const Matrix L = build_temporal_laplacian(n, params.neighbor_window);

    // Dictionary from k-means++ / Lloyd centroids of the columns.
    const auto km = kmeans_detailed(X.transpose(), r, params.rng_seed, {.restarts = 1, .max_iter = 100});
    Matrix D = km.centroids.transpose().cwiseMax(0.0);
    for (Index a = 0; a < r; ++a) {
        const double nrm = D.col(a).norm();
        if (nrm > 0.0)
            D.col(a) /= nrm;
        else
            D.col(a).setConstant(1.0 / std::sqrt(static_cast<double>(dim)));
    }

    detail::TscCodeSolver codes(X, L, params);
    // Codes from a nonnegative least-squares fit against the initial dictionary.
    Matrix Z = D.colPivHouseholderQr().solve(X).cwiseMax(0.0);
    for (int it = 0; it < 50; ++it) Z = codes.gradient_step(D, Z);

    double prev = codes.objective(D, Z);
    // Changes are measured against at least this much, so round-off on an
    // exact fit (objective near zero) is neither a rise nor a stall.
    const double floor = std::max(1e-12 * X.squaredNorm(), 1e-300);
    int rising = 0;
    for (int it = 1; it <= params.max_iter; ++it) {
        const Matrix candidate = codes.admm(D, Z);
        if (codes.objective(D, candidate) <= codes.objective(D, Z)) Z = candidate;
        Z = codes.gradient_step(D, Z);

        if (params.dictionary_update == DictionaryUpdate::multiplicative) {
            // Shrinking long atoms inflates Z, so the multiplicative step is
            // kept only when it pays off; otherwise fall back to a projected step.
            const double before = codes.objective(D, Z);
            Matrix D_try = D, Z_try = Z;
            detail::dictionary_step(X, D_try, Z_try, params, DictionaryUpdate::multiplicative);
            detail::normalize_atoms(D_try, Z_try, true);
            if (codes.objective(D_try, Z_try) <= before) {
                D = std::move(D_try);
                Z = std::move(Z_try);
            } else {
                detail::dictionary_step(X, D, Z, params, DictionaryUpdate::projected_gradient);
                detail::normalize_atoms(D, Z, false);
            }
        } else {
            detail::dictionary_step(X, D, Z, params, DictionaryUpdate::projected_gradient);
            detail::normalize_atoms(D, Z, false);
        }

        const double obj = codes.objective(D, Z);
        model.objective_trace.push_back(obj);
        model.iterations = it;
        if (!std::isfinite(obj)) throw NumericalError("solve_tsc: objective became non-finite");
        rising = (obj > prev + 1e-6 * std::max(prev, floor)) ? rising + 1 : 0;
        if (rising >= 3) {
            std::string trace;
            for (double v : model.objective_trace) trace += " " + std::to_string(v);
            throw NumericalError("solve_tsc: objective diverging; trace:" + trace);
        }
        const double change = std::abs(prev - obj) / std::max(prev, floor);
        prev = obj;
        if (change < params.tol) {
            model.converged = true;
            break;
        }
    }
    model.dictionary = std::move(D);
    model.codes = std::move(Z);
    return model;
}

/// Solve the TSC model, build a cosine affinity over the codes and cut it
/// into k groups with normalized cuts.
inline ClusterLabels tsc_cluster(const Matrix& X, const TscParams& params, int k, TscModel* model_out = nullptr) {
    if (k < 1) throw ParameterError("tsc_cluster: k must be positive");
    if (k == 1) return {std::vector<int>(static_cast<std::size_t>(X.cols()), 0), 1};
    TscModel model = solve_tsc(X, params);
    ClusterLabels labels = normalized_cuts(build_affinity_cosine(model.codes), k, params.rng_seed);
    if (model_out) *model_out = std::move(model);
    return labels;
}

}  // namespace skelsc
