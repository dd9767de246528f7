#include "cam/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cam/rng.hpp"
#include "cam/stats.hpp"

namespace cam {

namespace {

enum EntryKind : std::uint64_t { kPsi = 1, kOmega = 2, kLambda = 3, kTheta0 = 4, kTheta0m = 5, kThetam = 6 };

double evaluate(const UKernelSpec& k, const ProjectedSample& s, std::span<const std::size_t> idx,
                std::vector<Record>& args) {
    const std::size_t r = idx.size();
    args.resize(r);
    if (k.symmetric || r == 1) {
        for (std::size_t a = 0; a < r; ++a) args[a] = s[idx[a]];
        return k.eval(args);
    }
    std::vector<std::size_t> order(idx.begin(), idx.end());
    std::sort(order.begin(), order.end());
    CompensatedSum sum;
    std::size_t count = 0;
    do {
        for (std::size_t a = 0; a < r; ++a) args[a] = s[order[a]];
        sum.add(k.eval(args));
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    return sum.value() / static_cast<double>(count);
}

// Averages f over k-subsets of [0, n): every subset when C(n, k) <= budget,
// otherwise `budget` uniform draws.
template <class F>
UStatEstimate average_subsets(std::size_t n, std::size_t k, std::uint64_t budget, std::uint64_t seed, F&& f) {
    UStatEstimate out;
    const std::uint64_t total = binomial_capped(n, k, budget);
    CompensatedSum sum;
    std::vector<std::size_t> idx(k);
    if (total <= budget) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        do {
            sum.add(f(std::span<const std::size_t>(idx)));
        } while (next_combination(idx, n));
        out.exact = true;
        out.subsets_used = total;
    } else {
        Rng rng = make_rng(seed);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::uint64_t b = 0; b < budget; ++b) {
            draw_subset(rng, perm, k, idx);
            sum.add(f(std::span<const std::size_t>(idx)));
        }
        out.subsets_used = budget;
    }
    out.value = sum.value() / static_cast<double>(out.subsets_used);
    return out;
}

std::vector<std::size_t> merged(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

UStatEstimate eval_ustat(const ProjectedSample& sample, const UKernelSpec& k, std::uint64_t budget,
                         std::uint64_t seed) {
    if (k.order < 1) throw Error("kernel order must be at least 1");
    const auto r = static_cast<std::size_t>(k.order);
    if (sample.size() < r)
        throw InsufficientData("U-statistic of order " + std::to_string(r) + " needs at least " +
                               std::to_string(r) + " rows, got " + std::to_string(sample.size()));
    if (budget == 0) throw Error("subset budget must be positive");
    std::vector<Record> args;
    return average_subsets(sample.size(), r, budget, seed,
                           [&](std::span<const std::size_t> idx) { return evaluate(k, sample, idx, args); });
}

UStatEstimate cc_ustat(const MaskedDataset& ds, const PatternGroups& groups, const UKernelSpec& phi,
                       std::uint64_t budget, std::uint64_t seed) {
    const auto& rows = groups.complete();
    if (rows.size() < static_cast<std::size_t>(phi.order))
        throw InsufficientData("too few complete cases: " + std::to_string(rows.size()) + " for a kernel of order " +
                               std::to_string(phi.order));
    return eval_ustat(project(ds, rows, phi.pattern), phi, budget, seed);
}

std::pair<UStatEstimate, UStatEstimate> adjustment_pair(const MaskedDataset& ds, const PatternGroups& groups,
                                                        const AdjustmentSet& adj, const Pattern& m,
                                                        const UKernelSpec& phim, std::uint64_t budget,
                                                        std::uint64_t seed) {
    const auto k = adj.index_of(m);
    if (!k) throw PatternError("pattern " + m.to_string() + " is not in the adjustment set");
    if (phim.pattern != m)
        throw PatternError("adjustment kernel '" + phim.label + "' lives on pattern " + phim.pattern.to_string() +
                           ", expected " + m.to_string());
    const auto& rows = adj.entries[*k].rows;
    const auto r = static_cast<std::size_t>(phim.order);
    if (groups.n0() < r || rows.size() < r)
        throw InsufficientData("pattern " + m.to_string() + ": need at least " + std::to_string(r) +
                               " rows in both the complete and the incomplete group");
    auto s0 = eval_ustat(project(ds, groups.complete(), m), phim, budget, derive_seed(seed, {kTheta0m, m.bits()}));
    auto sm = eval_ustat(project(ds, rows, m), phim, budget, derive_seed(seed, {kThetam, m.bits()}));
    return {s0, sm};
}

double geometry_integrand(const UKernelSpec& first, const ProjectedSample& pa, const UKernelSpec& second,
                          const ProjectedSample& pb, std::span<const std::size_t> t) {
    const auto r = static_cast<std::size_t>(first.order);
    thread_local std::vector<std::size_t> ia, ib, ja, jb;
    thread_local std::vector<Record> args;
    ia.assign(t.begin(), t.begin() + r);
    ib.assign(t.begin() + (2 * r - 1), t.begin() + (3 * r - 1));
    ja.assign(1, t[0]);
    ja.insert(ja.end(), t.begin() + r, t.begin() + (2 * r - 1));
    jb.assign(1, t[2 * r - 1]);
    jb.insert(jb.end(), t.begin() + (3 * r - 1), t.begin() + (4 * r - 2));
    const double u = evaluate(first, pa, ia, args) - evaluate(first, pa, ib, args);
    const double v = evaluate(second, pb, ja, args) - evaluate(second, pb, jb, args);
    return 0.5 * u * v;
}

UStatEstimate geometry_entry(const UKernelSpec& first, const ProjectedSample& pa, const UKernelSpec& second,
                             const ProjectedSample& pb, std::uint64_t budget, std::uint64_t seed) {
    if (first.order != second.order) throw Error("geometry kernels must share the same order");
    if (pa.size() != pb.size()) throw DimensionMismatch("geometry projections cover different row pools");
    const auto size = static_cast<std::size_t>(4 * first.order - 2);
    if (pa.size() < size)
        throw InsufficientData("geometry estimation needs " + std::to_string(size) + " pooled rows, got " +
                               std::to_string(pa.size()));
    if (budget == 0) throw Error("subset budget must be positive");
    return average_subsets(pa.size(), size, budget, seed, [&](std::span<const std::size_t> t) {
        return geometry_integrand(first, pa, second, pb, t);
    });
}

UGeometryEstimate estimate_geometry(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                                    const UKernelSpec& phi, const std::vector<UKernelSpec>& phims,
                                    std::uint64_t budget, std::uint64_t seed) {
    if (phims.size() != adj.size()) throw DimensionMismatch("one adjustment kernel is needed per pattern");
    const auto& a0 = groups.complete();
    const std::size_t n0 = a0.size();
    const std::size_t k = adj.size();
    for (std::size_t i = 0; i < k; ++i) {
        if (phims[i].pattern != adj.entries[i].pattern)
            throw PatternError("adjustment kernel " + std::to_string(i + 1) + " does not match pattern " +
                               adj.entries[i].pattern.to_string());
        if (phims[i].order != phi.order) throw Error("adjustment kernels must have the same order as phi");
        if (adj.entries[i].rows.empty())
            throw InsufficientData("pattern " + adj.entries[i].pattern.to_string() + " has no rows");
    }

    UGeometryEstimate g;
    g.patterns = adj.patterns();
    g.budget = budget;
    g.omega = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    g.lambda = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));

    const auto p0 = project(ds, a0, phi.pattern);
    auto psi = geometry_entry(phi, p0, phi, p0, budget, derive_seed(seed, {kPsi}));
    g.psi = psi.value;
    g.exact = psi.exact;

    for (std::size_t i = 0; i < k; ++i) {
        const auto& m = adj.entries[i].pattern;
        auto om = geometry_entry(phi, p0, phims[i], project(ds, a0, m), budget, derive_seed(seed, {kOmega, m.bits()}));
        g.omega[i] = om.value;
        g.exact = g.exact && om.exact;

        const auto pool = merged(a0, adj.entries[i].rows);
        const auto pm = project(ds, pool, m);
        auto lam = geometry_entry(phims[i], pm, phims[i], pm, budget, derive_seed(seed, {kLambda, m.bits(), m.bits()}));
        const double nm = static_cast<double>(adj.entries[i].rows.size());
        g.lambda(i, i) = lam.value * (1.0 + static_cast<double>(n0) / nm);
        g.exact = g.exact && lam.exact;
    }

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const auto& m1 = adj.entries[i].pattern;
            const auto& m2 = adj.entries[j].pattern;
            const Pattern lo = pmin(m1, m2);
            std::vector<std::size_t> extra;
            if (adj.integrated)
                extra = integration_rows(groups, lo);
            else if (!lo.is_complete())
                extra = groups.rows(lo);
            const auto pool = merged(a0, extra);
            auto e = geometry_entry(phims[i], project(ds, pool, m1), phims[j], project(ds, pool, m2), budget,
                                    derive_seed(seed, {kLambda, m1.bits(), m2.bits()}));
            g.lambda(i, j) = g.lambda(j, i) = e.value;
            g.exact = g.exact && e.exact;
        }
    }
    return g;
}

CamUStatResult cam_ustat(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                         const UKernelSpec& phi, const std::vector<UKernelSpec>& phims, const UStatOptions& opt) {
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    if (phims.size() != adj.size()) throw DimensionMismatch("one adjustment kernel is needed per pattern");
    CamUStatResult res;
    res.alpha = opt.alpha;
    res.n0 = groups.n0();
    const auto r = static_cast<double>(phi.order);
    const std::size_t k = adj.size();

    res.components.theta0 = cc_ustat(ds, groups, phi, opt.estimate_budget, derive_seed(opt.seed, {kTheta0})).value;
    res.components.theta0M.resize(static_cast<Eigen::Index>(k));
    res.components.thetaM.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& e = adj.entries[i];
        auto [s0, sm] = adjustment_pair(ds, groups, adj, e.pattern, phims[i], opt.estimate_budget, opt.seed);
        res.components.theta0M[i] = s0.value;
        res.components.thetaM[i] = sm.value;
        res.group_sizes.push_back(e.rows.size());
    }

    res.geometry = estimate_geometry(ds, groups, adj, phi, phims, opt.budget, opt.seed);
    const auto og = optimal_gamma({res.geometry.omega, res.geometry.lambda, {}, 0.0});
    if (og.indefinite) res.warnings.push_back("estimated lambda is indefinite; gamma uses its pseudo-inverse");
    res.gamma = og.gamma;
    res.estimate = combine(res.components, res.gamma);

    double var = res.geometry.psi - og.reduction;
    if (var < 0.0) {
        res.warnings.push_back("plug-in variance was negative and has been clamped to 0");
        var = 0.0;
    }
    const double n0 = static_cast<double>(res.n0);
    const double z = normal_quantile(1.0 - opt.alpha / 2.0);
    res.se = r * std::sqrt(var / n0);
    res.ci_lo = res.estimate - z * res.se;
    res.ci_hi = res.estimate + z * res.se;

    res.cc_estimate = res.components.theta0;
    res.cc_se = r * std::sqrt(std::max(res.geometry.psi, 0.0) / n0);
    res.cc_ci_lo = res.cc_estimate - z * res.cc_se;
    res.cc_ci_hi = res.cc_estimate + z * res.cc_se;
    return res;
}

}  // namespace cam
