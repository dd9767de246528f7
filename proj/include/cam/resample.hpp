#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "cam/dataset.hpp"

namespace cam {

using SampleEstimator = std::function<double(const ProjectedSample&)>;

struct BalancedAdjustment {
    double theta0m_bar = 0.0;
    double thetam_bar = 0.0;
    std::size_t subsample_size = 0;
    std::uint64_t draws0 = 0;
    std::uint64_t drawsm = 0;
    bool exact0 = false;
    bool exactm = false;
};

/// Averages `estimator` over subsamples of size min(n0, n_m) drawn from the
/// complete cases and from the rows of pattern m, both projected to m. The
/// smaller group is used once in full; the other side is enumerated when
/// C(N, k) <= budget and sampled `budget` times otherwise.
BalancedAdjustment balanced_adjustment(const MaskedDataset& ds, const PatternGroups& groups,
                                       const AdjustmentSet& adj, const Pattern& m,
                                       const SampleEstimator& estimator, std::uint64_t budget = 1000,
                                       std::uint64_t seed = 0);

}  // namespace cam
