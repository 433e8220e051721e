#pragma once

#include "skelsc/common.hpp"
#include "skelsc/graph_clustering.hpp"
#include "skelsc/self_expressive.hpp"
#include "skelsc/skeleton_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace skelsc {

enum class PruneStrategy {
    min_phi,
    min_temporalssc,
    percentage_temporalssc,
    threshold_temporalssc,
    tsc_min,
    tsc_max,
    temporal_sc,
    temporal_km,
};

enum class PruneMethod { ssc, spectral, kmeans };

struct PruneConfig {
    PruneStrategy strategy = PruneStrategy::min_phi;
    std::optional<int> phi_percent;  // 25, 50 or 75; percentage/threshold strategies only
    std::uint64_t rng_seed = 0;
    SolverParams solver_params;

    void validate() const {
        const bool needs_pct = strategy == PruneStrategy::percentage_temporalssc ||
                               strategy == PruneStrategy::threshold_temporalssc;
        if (needs_pct != phi_percent.has_value())
            throw ConfigError(needs_pct ? "prune: strategy requires phi_percent"
                                        : "prune: phi_percent only applies to percentage/threshold strategies");
        if (phi_percent && *phi_percent != 25 && *phi_percent != 50 && *phi_percent != 75)
            throw ConfigError("prune: phi_percent must be 25, 50 or 75");
    }
};

struct PruneResult {
    SkeletonSequence sequence;
    bool resplit = false;  // clustering produced fewer than phi groups
};

/// round(pct% * length) with halves rounded up, never below one frame.
inline Index percent_length(int percent, Index length) {
    return std::max<Index>(1, static_cast<Index>(std::lround(percent / 100.0 * static_cast<double>(length))));
}

/// Replace each group of frames by its mean pose. `groups[t]` is the group
/// of frame t (any integer ids); output frames follow each group's earliest
/// timestamp.
inline SkeletonSequence average_groups(const SkeletonSequence& seq, const std::vector<int>& groups) {
    const Index T = seq.timestamps();
    if (static_cast<Index>(groups.size()) != T) throw ParameterError("average_groups: one group id per frame required");
    std::vector<int> order;  // group ids by first appearance
    std::map<int, std::vector<Index>> members;
    for (Index t = 0; t < T; ++t) {
        auto& m = members[groups[static_cast<std::size_t>(t)]];
        if (m.empty()) order.push_back(groups[static_cast<std::size_t>(t)]);
        m.push_back(t);
    }
    Matrix out(static_cast<Index>(order.size()), seq.frame_dim());
    for (std::size_t g = 0; g < order.size(); ++g) {
        const auto& idx = members[order[g]];
        // Offsetting by the first member keeps identical frames bit-exact.
        const Eigen::RowVectorXd ref = seq.frames().row(idx.front());
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(seq.frame_dim());
        for (Index t : idx) acc += seq.frames().row(t) - ref;
        out.row(static_cast<Index>(g)) = ref + acc / static_cast<double>(idx.size());
    }
    return {seq.joints(), std::move(out)};
}

namespace detail {

inline std::vector<int> group_frames(const SkeletonSequence& seq, int phi, PruneMethod method, std::uint64_t seed,
                                     const SolverParams& params) {
    const Matrix& P = seq.frames();
    switch (method) {
        case PruneMethod::kmeans: return kmeans(P, phi, seed).labels;
        case PruneMethod::spectral: {
            const Matrix frames = standardize_rows(P.transpose());
            return spectral_clustering(build_affinity_cosine(frames), phi, seed).labels;
        }
        case PruneMethod::ssc: {
            const Matrix frames = standardize_rows(P.transpose());
            const auto C = solve_ssc_admm(frames, params);
            return spectral_clustering(build_affinity_selfexpress(C.coeffs), phi, seed).labels;
        }
    }
    throw ParameterError("unknown prune method");
}

// Splits the largest group (chronological halves) until `phi` groups exist.
inline bool resplit_groups(std::vector<int>& groups, int phi) {
    bool changed = false;
    for (;;) {
        std::map<int, std::vector<std::size_t>> members;
        for (std::size_t t = 0; t < groups.size(); ++t) members[groups[t]].push_back(t);
        if (static_cast<int>(members.size()) >= phi) return changed;
        auto largest = std::max_element(members.begin(), members.end(),
                                        [](auto& a, auto& b) { return a.second.size() < b.second.size(); });
        const int fresh = members.rbegin()->first + 1;
        const auto& idx = largest->second;
        for (std::size_t i = idx.size() / 2; i < idx.size(); ++i) groups[idx[i]] = fresh;
        changed = true;
    }
}

}  // namespace detail

/// Compress a sequence to `phi` frames by clustering its timestamps and
/// averaging the poses inside every cluster.
inline PruneResult prune_sequence(const SkeletonSequence& seq, Index phi, PruneMethod method, std::uint64_t seed = 0,
                                  const SolverParams& params = {}) {
    const Index T = seq.timestamps();
    if (phi < 1 || phi > T)
        throw ParameterError("prune_sequence: phi " + std::to_string(phi) + " outside [1, " + std::to_string(T) + "]");
    std::vector<int> groups(static_cast<std::size_t>(T), 0);
    PruneResult res;
    if (phi == T) {
        std::iota(groups.begin(), groups.end(), 0);
    } else if (phi > 1) {
        groups = detail::group_frames(seq, static_cast<int>(phi), method, seed, params);
        res.resplit = detail::resplit_groups(groups, static_cast<int>(phi));
        if (res.resplit) log::debug("prune_sequence: clustering returned fewer than phi groups, re-split");
    }
    res.sequence = average_groups(seq, groups);
    return res;
}

/// Uniform random subsample of `phi` timestamps, restored to temporal order.
inline SkeletonSequence subsample_frames(const SkeletonSequence& seq, Index phi, std::uint64_t seed) {
    const Index T = seq.timestamps();
    if (phi < 1 || phi > T) throw ParameterError("subsample_frames: phi outside [1, T]");
    std::vector<Index> idx(static_cast<std::size_t>(T));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(phi));
    std::sort(idx.begin(), idx.end());
    Matrix out(phi, seq.frame_dim());
    for (Index i = 0; i < phi; ++i) out.row(i) = seq.frames().row(idx[static_cast<std::size_t>(i)]);
    return {seq.joints(), std::move(out)};
}

/// Repeat frames cyclically (1,2,..,T,1,2,..) up to `length`.
inline SkeletonSequence replicate_cyclic(const SkeletonSequence& seq, Index length) {
    const Index T = seq.timestamps();
    if (length < T) throw ParameterError("replicate_cyclic: target shorter than sequence");
    Matrix out(length, seq.frame_dim());
    for (Index i = 0; i < length; ++i) out.row(i) = seq.frames().row(i % T);
    return {seq.joints(), std::move(out)};
}

struct StrategyResult {
    Dataset dataset;
    std::size_t resplit_samples = 0;
};

/// Bring every sample of `data` to the length prescribed by `cfg.strategy`.
/// Labels are copied through untouched.
inline StrategyResult apply_strategy_detailed(const Dataset& data, const PruneConfig& cfg) {
    if (data.samples.empty()) throw ParameterError("apply_strategy: empty dataset");
    cfg.validate();
    StrategyResult res;
    res.dataset.labels = data.labels;
    res.dataset.num_classes = data.num_classes;
    const Index shortest = data.min_length();
    const Index longest = data.max_length();

    auto prune = [&](const SkeletonSequence& s, Index phi, PruneMethod method, std::size_t i) {
        auto r = prune_sequence(s, phi, method, detail::mix_seed(cfg.rng_seed, i), cfg.solver_params);
        if (r.resplit) ++res.resplit_samples;
        return std::move(r.sequence);
    };

    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        const std::uint64_t seed = detail::mix_seed(cfg.rng_seed, i);
        switch (cfg.strategy) {
            case PruneStrategy::min_phi:
            case PruneStrategy::tsc_min:
                res.dataset.samples.push_back(subsample_frames(s, shortest, seed));
                break;
            case PruneStrategy::min_temporalssc:
                res.dataset.samples.push_back(prune(s, shortest, PruneMethod::ssc, i));
                break;
            case PruneStrategy::percentage_temporalssc:
                res.dataset.samples.push_back(prune(s, percent_length(*cfg.phi_percent, s.timestamps()), PruneMethod::ssc, i));
                break;
            case PruneStrategy::threshold_temporalssc: {
                const Index thr = percent_length(*cfg.phi_percent, longest);
                res.dataset.samples.push_back(s.timestamps() > thr ? prune(s, thr, PruneMethod::ssc, i) : s);
                break;
            }
            case PruneStrategy::tsc_max:
                res.dataset.samples.push_back(replicate_cyclic(s, longest));
                break;
            case PruneStrategy::temporal_sc:
                res.dataset.samples.push_back(prune(s, shortest, PruneMethod::spectral, i));
                break;
            case PruneStrategy::temporal_km:
                res.dataset.samples.push_back(prune(s, shortest, PruneMethod::kmeans, i));
                break;
        }
    }
    return res;
}

inline Dataset apply_strategy(const Dataset& data, const PruneConfig& cfg) {
    return apply_strategy_detailed(data, cfg).dataset;
}

}  // namespace skelsc
