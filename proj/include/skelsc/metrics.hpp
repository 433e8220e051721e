#pragma once

#include "skelsc/common.hpp"
#include "skelsc/graph_clustering.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace skelsc {

struct Assignment {
    std::vector<int> row_to_col;  // a permutation of 0..k-1
    double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// shortest augmenting paths with row/column potentials, O(k^3)).
///
/// Columns are scanned in increasing order and only strict improvements
/// replace the current candidate, so ties resolve to the lowest index.
inline Assignment hungarian(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw ParameterError("hungarian: cost matrix must be square");
    if (!cost.allFinite()) throw ParameterError("hungarian: non-finite cost entry");
    const Index n = cost.rows();
    Assignment out;
    if (n == 0) return out;

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; column 0 is the virtual source.
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    for (Index row = 1; row <= n; ++row) {
        match[0] = row;
        Index j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const Index i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (used[js]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[js];
                if (cur < minv[js]) {
                    minv[js] = cur;
                    way[js] = j0;
                }
                if (minv[js] < delta) {
                    delta = minv[js];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (used[js]) {
                    u[static_cast<std::size_t>(match[js])] += delta;
                    v[js] -= delta;
                } else {
                    minv[js] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    out.row_to_col.assign(static_cast<std::size_t>(n), -1);
    for (Index j = 1; j <= n; ++j) out.row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = static_cast<int>(j - 1);
    for (Index i = 0; i < n; ++i) out.cost += cost(i, out.row_to_col[static_cast<std::size_t>(i)]);
    return out;
}

struct AssignmentResult {
    std::vector<int> mapping;         // cluster id -> class id, over the padded square size
    std::vector<int> matched_labels;  // predictions expressed as class ids
    std::size_t correct = 0;
    double accuracy_percent = 0.0;
};

/// Clustering accuracy: the best one-to-one relabeling of predicted clusters
/// onto classes (Hungarian on the negated contingency table), then
/// ACC = (1 - misclassified / total) * 100. Cluster and class id ranges are
/// padded to a common square size; a cluster matched to a padding class
/// counts as entirely wrong.
inline AssignmentResult accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw ParameterError("accuracy: prediction and truth lengths differ");
    if (pred.empty()) throw ParameterError("accuracy: empty labeling");
    const auto negative = [](int l) { return l < 0; };
    if (std::any_of(pred.begin(), pred.end(), negative) || std::any_of(truth.begin(), truth.end(), negative))
        throw ParameterError("accuracy: labels must be non-negative");
    const int m = 1 + std::max(*std::max_element(pred.begin(), pred.end()), *std::max_element(truth.begin(), truth.end()));

    Matrix counts = Matrix::Zero(m, m);
    for (std::size_t i = 0; i < pred.size(); ++i) counts(pred[i], truth[i]) += 1.0;
    const Assignment a = hungarian(-counts);

    AssignmentResult r;
    r.mapping = a.row_to_col;
    r.matched_labels.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int mapped = r.mapping[static_cast<std::size_t>(pred[i])];
        r.matched_labels.push_back(mapped);
        if (mapped == truth[i]) ++r.correct;
    }
    const double total = static_cast<double>(pred.size());
    r.accuracy_percent = 100.0 * static_cast<double>(r.correct) / total;
    return r;
}

inline AssignmentResult accuracy(const ClusterLabels& pred, const std::vector<int>& truth) {
    return accuracy(pred.labels, truth);
}

}  // namespace skelsc
