#pragma once

#include "skelsc/common.hpp"
#include "skelsc/skeleton_data.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace skelsc {

/// Temporal covariance of a sequence's frames, a d x d symmetric PSD matrix.
struct CovarianceDescriptor {
    Matrix matrix;

    Index dim() const { return matrix.rows(); }
};

/// Population covariance (divisor T) of the frames of `seq`.
inline CovarianceDescriptor covariance(const SkeletonSequence& seq) {
    const Matrix& P = seq.frames();
    if (!P.allFinite()) throw ParameterError("covariance: non-finite input");
    const double T = static_cast<double>(P.rows());
    const Eigen::RowVectorXd mean = P.colwise().sum() / T;
    const Matrix centered = P.rowwise() - mean;
    Matrix cov = (centered.transpose() * centered) / T;
    // GEMM already yields a symmetric result up to round-off; make it exact.
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {std::move(cov)};
}

inline Index flattened_length(Index dim) { return dim * (dim + 1) / 2; }

/// Row-major walk over the diagonal and strict upper triangle.
///
/// With `sqrt2_offdiag`, off-diagonal entries are multiplied by sqrt(2) so the
/// Euclidean inner product of flattened vectors equals the Frobenius inner
/// product of the matrices.
inline Vector flatten_upper(const CovarianceDescriptor& desc, bool sqrt2_offdiag = false) {
    const Index d = desc.dim();
    Vector out(flattened_length(d));
    Index k = 0;
    for (Index i = 0; i < d; ++i)
        for (Index j = i; j < d; ++j)
            out(k++) = (sqrt2_offdiag && j != i) ? std::numbers::sqrt2 * desc.matrix(i, j) : desc.matrix(i, j);
    return out;
}

/// Inverse of flatten_upper.
inline CovarianceDescriptor unflatten_upper(const Vector& values, bool sqrt2_offdiag = false) {
    // d(d+1)/2 = n  =>  d = (sqrt(8n+1) - 1) / 2
    const auto d = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(values.size()) + 1.0) - 1.0) / 2.0));
    if (flattened_length(d) != values.size())
        throw ParameterError("unflatten_upper: length is not triangular");
    Matrix m(d, d);
    Index k = 0;
    for (Index i = 0; i < d; ++i)
        for (Index j = i; j < d; ++j) {
            const double v = (sqrt2_offdiag && j != i) ? values(k) / std::numbers::sqrt2 : values(k);
            m(i, j) = v;
            m(j, i) = v;
            ++k;
        }
    return {std::move(m)};
}

/// Column-stack the flattened covariance of every sample into a D x N matrix.
inline Matrix encode_covariance(const std::vector<SkeletonSequence>& samples, bool sqrt2_offdiag = false) {
    if (samples.empty()) throw ParameterError("encode_covariance: no samples");
    const Index d = samples.front().frame_dim();
    Matrix X(flattened_length(d), static_cast<Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].frame_dim() != d) throw ParameterError("encode_covariance: samples differ in frame size");
        X.col(static_cast<Index>(i)) = flatten_upper(covariance(samples[i]), sqrt2_offdiag);
    }
    return X;
}

/// Column-stack each sample's frames (t-major) into a D x N matrix. All
/// samples must share one length.
inline Matrix encode_raw_stacked(const std::vector<SkeletonSequence>& samples) {
    if (samples.empty()) throw ParameterError("encode_raw_stacked: no samples");
    const Index T = samples.front().timestamps();
    const Index d = samples.front().frame_dim();
    Matrix X(T * d, static_cast<Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.timestamps() != T || s.frame_dim() != d)
            throw ParameterError("encode_raw_stacked: samples must share length and frame size");
        for (Index t = 0; t < T; ++t) X.col(static_cast<Index>(i)).segment(t * d, d) = s.frames().row(t).transpose();
    }
    return X;
}

}  // namespace skelsc
