#include "cam/resample.hpp"

#include <numeric>

#include "cam/error.hpp"
#include "cam/rng.hpp"
#include "cam/stats.hpp"

namespace cam {

namespace {

struct SideAverage {
    double value = 0.0;
    std::uint64_t draws = 0;
    bool exact = false;
};

SideAverage side_average(const ProjectedSample& s, std::size_t k, const SampleEstimator& est,
                         std::uint64_t budget, std::uint64_t seed, const char* side) {
    auto run = [&](const ProjectedSample& sub, std::uint64_t draw) {
        try {
            return est(sub);
        } catch (const std::exception& e) {
            throw Error(std::string("estimator failed on ") + side + " subsample " + std::to_string(draw) + ": " +
                        e.what());
        }
    };
    SideAverage out;
    CompensatedSum sum;
    if (k == s.size()) {
        out.value = run(s, 0);
        out.draws = 1;
        out.exact = true;
        return out;
    }
    const std::uint64_t total = binomial_capped(s.size(), k, budget);
    std::vector<std::size_t> idx(k);
    if (total <= budget) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::uint64_t b = 0;
        do {
            sum.add(run(s.subset(idx), b++));
        } while (next_combination(idx, s.size()));
        out.draws = total;
        out.exact = true;
    } else {
        std::vector<std::size_t> perm(s.size());
        for (std::uint64_t b = 0; b < budget; ++b) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            Rng rng = make_rng(seed, {b});
            draw_subset(rng, perm, k, idx);
            sum.add(run(s.subset(idx), b));
        }
        out.draws = budget;
    }
    out.value = sum.value() / static_cast<double>(out.draws);
    return out;
}

}  // namespace

BalancedAdjustment balanced_adjustment(const MaskedDataset& ds, const PatternGroups& groups,
                                       const AdjustmentSet& adj, const Pattern& m,
                                       const SampleEstimator& estimator, std::uint64_t budget,
                                       std::uint64_t seed) {
    const auto k = adj.index_of(m);
    if (!k) throw PatternError("pattern " + m.to_string() + " is not in the adjustment set");
    if (budget == 0) throw Error("subsample budget must be positive");
    const auto& rows_m = adj.entries[*k].rows;
    if (groups.n0() == 0 || rows_m.empty())
        throw InsufficientData("balanced adjustment needs nonempty complete and pattern groups");
    const auto s0 = project(ds, groups.complete(), m);
    const auto sm = project(ds, rows_m, m);
    BalancedAdjustment out;
    out.subsample_size = std::min(s0.size(), sm.size());
    const auto a0 = side_average(s0, out.subsample_size, estimator, budget, derive_seed(seed, {0, m.bits()}),
                                 "complete-case");
    const auto am = side_average(sm, out.subsample_size, estimator, budget, derive_seed(seed, {1, m.bits()}),
                                 "pattern");
    out.theta0m_bar = a0.value;
    out.thetam_bar = am.value;
    out.draws0 = a0.draws;
    out.drawsm = am.draws;
    out.exact0 = a0.exact;
    out.exactm = am.exact;
    return out;
}

}  // namespace cam
