#pragma once

#include "skelsc/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace skelsc {

/// Symmetric, nonnegative, zero-diagonal N x N weight matrix.
struct AffinityGraph {
    Matrix weights;

    Index size() const { return weights.rows(); }

    bool valid(double tol = 0.0) const {
        if (weights.rows() != weights.cols()) return false;
        for (Index i = 0; i < weights.rows(); ++i) {
            if (weights(i, i) != 0.0) return false;
            for (Index j = 0; j < weights.cols(); ++j)
                if (weights(i, j) < 0.0 || std::abs(weights(i, j) - weights(j, i)) > tol) return false;
        }
        return true;
    }
};

struct ClusterLabels {
    std::vector<int> labels;
    int k = 0;

    std::size_t size() const { return labels.size(); }

    bool valid() const {
        return std::all_of(labels.begin(), labels.end(), [this](int l) { return l >= 0 && l < k; });
    }
};

/// W = |C| + |C^T|, zero diagonal.
inline AffinityGraph build_affinity_selfexpress(const Matrix& C) {
    if (C.rows() != C.cols()) throw ParameterError("build_affinity_selfexpress: C must be square");
    Matrix W = C.cwiseAbs() + C.transpose().cwiseAbs();
    W.diagonal().setZero();
    return {std::move(W)};
}

/// Cosine similarity between columns of Z (r x N), clamped below at zero.
inline AffinityGraph build_affinity_cosine(const Matrix& Z) {
    const Index N = Z.cols();
    Vector norms = Z.colwise().norm().transpose();
    Matrix W = Matrix::Zero(N, N);
    Index zero_cols = 0;
    for (Index i = 0; i < N; ++i)
        if (norms(i) == 0.0) ++zero_cols;
    if (zero_cols > 0)
        log::warn("build_affinity_cosine: " + std::to_string(zero_cols) + " all-zero column(s) get zero affinity");
    const Matrix G = Z.transpose() * Z;
    for (Index j = 0; j < N; ++j)
        for (Index i = j + 1; i < N; ++i) {
            if (norms(i) == 0.0 || norms(j) == 0.0) continue;
            const double v = std::max(0.0, G(i, j) / (norms(i) * norms(j)));
            W(i, j) = v;
            W(j, i) = v;
        }
    return {std::move(W)};
}

enum class LaplacianKind { symmetric, unnormalized };

/// L_sym = I - D^-1/2 W D^-1/2 (isolated vertices take unit degree), or the
/// unnormalized D - W.
inline Matrix graph_laplacian(const AffinityGraph& graph, LaplacianKind kind = LaplacianKind::symmetric) {
    const Matrix& W = graph.weights;
    Vector deg = W.rowwise().sum();
    if (kind == LaplacianKind::unnormalized) {
        Matrix L = -W;
        L.diagonal() += deg;
        return L;
    }
    Vector inv_sqrt(deg.size());
    for (Index i = 0; i < deg.size(); ++i) inv_sqrt(i) = 1.0 / std::sqrt(deg(i) > 0.0 ? deg(i) : 1.0);
    Matrix L = -(inv_sqrt.asDiagonal() * W * inv_sqrt.asDiagonal());
    L.diagonal().array() += 1.0;
    return 0.5 * (L + L.transpose());
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
    int restarts = 10;
    int max_iter = 300;
};

struct KMeansResult {
    ClusterLabels labels;
    Matrix centroids;  // k x d
    double wcss = 0.0;
    int iterations = 0;
    std::vector<double> wcss_trace;  // objective after each Lloyd assignment of the kept restart
};

namespace detail {

inline double wcss(const Matrix& points, const std::vector<int>& labels, const Matrix& centroids) {
    double total = 0.0;
    for (Index i = 0; i < points.rows(); ++i)
        total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

inline int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& p, double* dist) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist) *dist = best_d;
    return best;
}

inline Matrix kmeanspp_init(const Matrix& points, int k, std::mt19937_64& rng) {
    const Index N = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<char> chosen(static_cast<std::size_t>(N), 0);
    std::uniform_int_distribution<Index> first(0, N - 1);
    Index idx = first(rng);
    centroids.row(0) = points.row(idx);
    chosen[static_cast<std::size_t>(idx)] = 1;
    Vector d2(N);
    for (Index i = 0; i < N; ++i) d2(i) = (points.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            idx = N - 1;
            for (Index i = 0; i < N; ++i) {
                target -= d2(i);
                if (target < 0.0 && d2(i) > 0.0) {
                    idx = i;
                    break;
                }
            }
            if (d2(idx) == 0.0)
                for (Index i = N - 1; i >= 0; --i)
                    if (d2(i) > 0.0) {
                        idx = i;
                        break;
                    }
        } else {
            // every point coincides with a centroid; fall back to an unused index
            std::vector<Index> free;
            for (Index i = 0; i < N; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) free.push_back(i);
            std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
            idx = free[pick(rng)];
        }
        chosen[static_cast<std::size_t>(idx)] = 1;
        centroids.row(c) = points.row(idx);
        for (Index i = 0; i < N; ++i) d2(i) = std::min(d2(i), (points.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

inline KMeansResult lloyd(const Matrix& points, int k, Matrix centroids, int max_iter) {
    const Index N = points.rows();
    KMeansResult res;
    std::vector<int> labels(static_cast<std::size_t>(N), -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Index i = 0; i < N; ++i) {
            const int c = nearest_centroid(centroids, points.row(i), nullptr);
            if (c != labels[static_cast<std::size_t>(i)]) {
                labels[static_cast<std::size_t>(i)] = c;
                changed = true;
            }
        }
        res.wcss_trace.push_back(wcss(points, labels, centroids));
        res.iterations = it + 1;
        if (!changed) break;

        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < N; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0)
                centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        // Empty clusters take over the point farthest from its centroid.
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            Index far = 0;
            double far_d = -1.0;
            for (Index i = 0; i < N; ++i) {
                const auto li = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
                if (counts[li] <= 1) continue;
                const double d = (points.row(i) - centroids.row(static_cast<Index>(li))).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far_d < 0.0) continue;
            --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
            labels[static_cast<std::size_t>(far)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            centroids.row(c) = points.row(far);
        }
    }
    res.labels = {std::move(labels), k};
    res.wcss = wcss(points, res.labels.labels, centroids);
    res.centroids = std::move(centroids);
    return res;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations, best of `restarts`
/// seeded runs by within-cluster sum of squares. Points are rows.
inline KMeansResult kmeans_detailed(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts = {}) {
    const Index N = points.rows();
    if (k < 1 || N < k) throw ParameterError("kmeans: need N >= k >= 1");
    if (!points.allFinite()) throw ParameterError("kmeans: non-finite point");
    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Matrix init = detail::kmeanspp_init(points, k, rng);
        KMeansResult res = detail::lloyd(points, k, std::move(init), opts.max_iter);
        if (res.wcss < best.wcss) best = std::move(res);
    }
    return best;
}

inline ClusterLabels kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts = {}) {
    return kmeans_detailed(points, k, seed, opts).labels;
}

// ---------------------------------------------------------------------------
// Spectral partitioning

namespace detail {

inline void check_graph(const AffinityGraph& g, int k, const char* who) {
    if (g.weights.rows() != g.weights.cols()) throw ParameterError(std::string(who) + ": affinity must be square");
    if (k < 1 || g.size() < k) throw ParameterError(std::string(who) + ": need N >= k >= 1");
    if (!g.weights.allFinite()) throw ParameterError(std::string(who) + ": non-finite affinity");
}

inline Matrix smallest_eigenvectors(const Matrix& L, int k, const char* who) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
    if (eig.info() != Eigen::Success) throw NumericalError(std::string(who) + ": eigendecomposition failed");
    return eig.eigenvectors().leftCols(k);  // eigenvalues ascend
}

}  // namespace detail

struct SpectralOptions {
    LaplacianKind laplacian = LaplacianKind::symmetric;
    KMeansOptions kmeans;
};

/// Embed with the k eigenvectors of smallest eigenvalue of the Laplacian,
/// row-normalize the embedding and run seeded k-means on its rows.
inline ClusterLabels spectral_clustering(const AffinityGraph& graph, int k, std::uint64_t seed,
                                         const SpectralOptions& opts = {}) {
    detail::check_graph(graph, k, "spectral_clustering");
    if (k == 1) return {std::vector<int>(static_cast<std::size_t>(graph.size()), 0), 1};
    Matrix V = detail::smallest_eigenvectors(graph_laplacian(graph, opts.laplacian), k, "spectral_clustering");
    for (Index i = 0; i < V.rows(); ++i) {
        const double n = V.row(i).norm();
        if (n > 0.0) V.row(i) /= n;
    }
    return kmeans(V, k, seed, opts.kmeans);
}

/// k-way normalized cut: relaxed indicators are the generalized eigenvectors
/// of (D - W) v = lambda D v, obtained as D^-1/2 u from the symmetric
/// Laplacian's eigenvectors u, then clustered by seeded k-means.
inline ClusterLabels normalized_cuts(const AffinityGraph& graph, int k, std::uint64_t seed,
                                     const KMeansOptions& opts = {}) {
    detail::check_graph(graph, k, "normalized_cuts");
    if (k == 1) return {std::vector<int>(static_cast<std::size_t>(graph.size()), 0), 1};
    Matrix U = detail::smallest_eigenvectors(graph_laplacian(graph), k, "normalized_cuts");
    const Vector deg = graph.weights.rowwise().sum();
    for (Index i = 0; i < U.rows(); ++i) U.row(i) /= std::sqrt(deg(i) > 0.0 ? deg(i) : 1.0);
    return kmeans(U, k, seed, opts);
}

}  // namespace skelsc
