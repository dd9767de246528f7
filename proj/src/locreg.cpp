#include "cam/locreg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "cam/cam_core.hpp"
#include "cam/stats.hpp"

namespace cam {

namespace {

void kernel_masses(const ProjectedSample& s, std::span<const double> x, const SmootherSpec& spec,
                   std::vector<double>& k, double& total) {
    if (s.size() == 0) throw InsufficientData("local fit on an empty sample");
    if (s.dim() != spec.d || x.size() != static_cast<std::size_t>(spec.d))
        throw DimensionMismatch("local fit: sample, query and smoother dimensions must agree");
    k.resize(s.size());
    total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto xi = s.x(i);
        double v = 1.0;
        for (int j = 0; j < spec.d && v != 0.0; ++j) v *= kernel_1d(spec.family, (xi[j] - x[j]) / spec.h);
        k[i] = v;
        total += v;
    }
    if (!(total >= kMinLocalMass)) throw NoLocalData("no local data at the query point");
}

// Normalizes in place so that the left-to-right sum is exactly 1. The last
// weight is set to 1 - S with S the sum of the others; for S in [0, 1] the
// rounded S + fl(1 - S) equals 1. When S exceeds 1 the largest weight is
// trimmed first.
void normalize(std::vector<double>& w, double total) {
    std::size_t top = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] /= total;
        if (w[i] > w[top]) top = i;
    }
    const std::size_t last = w.size() - 1;
    for (int pass = 0; pass < 4; ++pass) {
        double head = 0.0;
        for (std::size_t i = 0; i < last; ++i) head += w[i];
        if (head <= 1.0) {
            w[last] = 1.0 - head;
            return;
        }
        w[top] -= head - 1.0;
    }
}

struct Fit {
    double centered = 0.0;  // sum w (y - a)
    double spread = 0.0;    // sum w ((y - a) - centered)^2
};

Fit centered_fit(const ProjectedSample& s, std::span<const double> x, const SmootherSpec& spec, double a) {
    thread_local std::vector<double> w;
    double total = 0.0;
    kernel_masses(s, x, spec, w, total);
    normalize(w, total);
    Fit f;
    for (std::size_t i = 0; i < w.size(); ++i) f.centered += w[i] * (s.y(i) - a);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double r = (s.y(i) - a) - f.centered;
        f.spread += w[i] * r * r;
    }
    return f;
}

}  // namespace

LocalWeights local_weights(const ProjectedSample& sample, std::span<const double> x_m, const SmootherSpec& spec) {
    LocalWeights lw;
    kernel_masses(sample, x_m, spec, lw.weights, lw.rawmass);
    normalize(lw.weights, lw.rawmass);
    return lw;
}

double loccon_point(const ProjectedSample& sample, std::span<const double> x_m, const SmootherSpec& spec) {
    if (sample.size() == 0) throw InsufficientData("local fit on an empty sample");
    const double a = sample.y(0);
    return a + centered_fit(sample, x_m, spec, a).centered;
}

double local_variance(const ProjectedSample& sample, std::span<const double> x_m, const SmootherSpec& spec,
                      double eta_hat) {
    const auto lw = local_weights(sample, x_m, spec);
    double s = 0.0;
    for (std::size_t i = 0; i < lw.weights.size(); ++i) {
        const double r = sample.y(i) - eta_hat;
        s += lw.weights[i] * r * r;
    }
    return s;
}

CamRegressionModel::CamRegressionModel(const MaskedDataset& ds, const PatternGroups& groups,
                                       const AdjustmentSet& adj, const SmootherSpec& spec)
    : spec_(spec) {
    if (!(spec.h > 0.0) || !std::isfinite(spec.h)) throw Error("bandwidth must be positive and finite");
    if (spec.d != ds.d()) throw DimensionMismatch("smoother dimension differs from dataset dimension");
    if (groups.n0() == 0) throw InsufficientData("no complete cases");
    const auto& a0 = groups.complete();
    complete_ = project(ds, a0, Pattern::complete(ds.d()));
    anchor_ = complete_.y(0);
    const auto consts = kernel_constants(spec, adj);
    for (std::size_t k = 0; k < adj.size(); ++k) {
        const auto& e = adj.entries[k];
        if (e.rows.empty()) throw InsufficientData("pattern " + e.pattern.to_string() + " has no rows");
        std::vector<std::size_t> pool;
        std::merge(a0.begin(), a0.end(), e.rows.begin(), e.rows.end(), std::back_inserter(pool));
        terms_.push_back({e.pattern, project(ds, a0, e.pattern), project(ds, e.rows, e.pattern),
                          project(ds, pool, e.pattern), consts.nu_0m[k] * consts.mu0_m[k] / consts.nu_m[k]});
    }
}

double CamRegressionModel::cc_at(std::span<const double> x) const {
    return anchor_ + centered_fit(complete_, x, spec_, anchor_).centered;
}

CamRegressionResult CamRegressionModel::at(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(spec_.d)) throw DimensionMismatch("query point dimension differs from d");
    CamRegressionResult res;
    res.warnings = warnings_;
    const double a = anchor_;
    const Fit f0 = centered_fit(complete_, x, spec_, a);
    res.eta_cc = a + f0.centered;
    res.sigma2_hat = f0.spread;

    const double n0 = static_cast<double>(complete_.size());
    CamComponents c;
    c.theta0 = f0.centered;
    std::vector<double> d0m, dm, gam;
    for (const auto& t : terms_) {
        RegressionTerm rt;
        rt.pattern = t.pattern;
        rt.n_m = t.group.size();
        const auto xm = project_point(x, t.pattern);
        const auto ms = marginal_kernel(spec_, t.pattern);
        try {
            const Fit g0 = centered_fit(t.complete, xm, ms, a);
            const Fit gm = centered_fit(t.group, xm, ms, a);
            const Fit gp = centered_fit(t.pooled, xm, ms, a);
            rt.eta0m = a + g0.centered;
            rt.etam = a + gm.centered;
            rt.sigma2_m = gp.spread;
            const double nm = static_cast<double>(rt.n_m);
            if (rt.sigma2_m > 0.0) {
                // sigma_m^2 = sigma^2 + tau_m >= sigma^2 in the population.
                const double share = std::min(res.sigma2_hat / rt.sigma2_m, 1.0);
                rt.gamma = t.ratio * share * nm / (n0 + nm);
            } else {
                res.warnings.push_back("pattern " + t.pattern.to_string() + ": zero local variance, gamma set to 0");
            }
            d0m.push_back(g0.centered);
            dm.push_back(gm.centered);
            gam.push_back(rt.gamma);
        } catch (const NoLocalData&) {
            rt.excluded = true;
            res.warnings.push_back("pattern " + t.pattern.to_string() + ": no local data, excluded");
        }
        res.terms.push_back(rt);
    }
    if (!terms_.empty() && gam.empty()) res.warnings.push_back("all patterns excluded; CAM equals complete-case");
    c.theta0M = Eigen::Map<Eigen::VectorXd>(d0m.data(), static_cast<Eigen::Index>(d0m.size()));
    c.thetaM = Eigen::Map<Eigen::VectorXd>(dm.data(), static_cast<Eigen::Index>(dm.size()));
    const Eigen::VectorXd g = Eigen::Map<Eigen::VectorXd>(gam.data(), static_cast<Eigen::Index>(gam.size()));
    res.eta_cam = gam.empty() ? res.eta_cc : a + combine(c, g);
    return res;
}

CamRegressionResult cam_regress_at(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                                   std::span<const double> x, const SmootherSpec& spec) {
    return CamRegressionModel(ds, groups, adj, spec).at(x);
}

LoocvResult loocv_bandwidth(const MaskedDataset& ds, const PatternGroups& groups, const std::vector<double>& grid,
                            KernelFamily family) {
    if (grid.empty()) throw Error("bandwidth grid is empty");
    const auto& a0 = groups.complete();
    if (a0.size() < 2) throw InsufficientData("leave-one-out needs at least two complete cases");
    const auto s = project(ds, a0, Pattern::complete(ds.d()));
    const std::size_t n = s.size();
    const double a = s.y(0);
    // Penalty per failed fit: larger than any attainable squared error.
    double ymin = s.y(0), ymax = s.y(0);
    for (std::size_t i = 0; i < n; ++i) {
        ymin = std::min(ymin, s.y(i));
        ymax = std::max(ymax, s.y(i));
    }
    const double penalty = 4.0 * (ymax - ymin) * (ymax - ymin) + 1.0;

    LoocvResult res;
    res.grid = grid;
    std::vector<double> k(n);
    for (double h : grid) {
        if (!(h > 0.0) || !std::isfinite(h)) throw Error("bandwidths must be positive and finite");
        CompensatedSum sse;
        std::size_t fails = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto xi = s.x(i);
            double mass = 0.0;
            double num = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const auto xj = s.x(j);
                double v = 1.0;
                for (int q = 0; q < ds.d() && v != 0.0; ++q) v *= kernel_1d(family, (xj[q] - xi[q]) / h);
                mass += v;
                num += v * (s.y(j) - a);
            }
            if (!(mass >= kMinLocalMass)) {
                ++fails;
                sse.add(penalty);
                continue;
            }
            const double r = s.y(i) - (a + num / mass);
            sse.add(r * r);
        }
        res.sse.push_back(sse.value());
        res.failures.push_back(fails);
        if (fails > 0)
            res.warnings.push_back("h = " + std::to_string(h) + ": " + std::to_string(fails) +
                                   " held-out rows had no local data");
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const auto key = std::make_pair(res.failures[g], res.sse[g]);
        const auto cur = std::make_pair(res.failures[best], res.sse[best]);
        if (key < cur || (key == cur && grid[g] < grid[best])) best = g;
    }
    res.h = grid[best];
    return res;
}

std::vector<double> default_bandwidth_grid(const MaskedDataset& ds, const PatternGroups& groups) {
    const double h0 = rule_of_thumb_bandwidth(ds, groups);
    std::vector<double> grid;
    for (int i = 0; i < 16; ++i) grid.push_back(h0 * std::exp2(-2.0 + 3.0 * i / 15.0));
    return grid;
}

MiseResult mise(const PointFn& etahat, const PointFn& eta, const PointSampler& sampler, std::size_t n_mc,
                std::uint64_t seed) {
    if (n_mc == 0) throw Error("mise needs at least one Monte Carlo draw");
    Rng rng = make_rng(seed);
    std::vector<double> x;
    CompensatedSum sum;
    MiseResult res;
    for (std::size_t b = 0; b < n_mc; ++b) {
        sampler(rng, x);
        double e = 0.0;
        try {
            e = etahat(x) - eta(x);
        } catch (const Error&) {
            ++res.skipped;
            continue;
        }
        sum.add(e * e);
        ++res.used;
    }
    if (res.skipped * 10 > n_mc)
        throw NoLocalData("mise: " + std::to_string(res.skipped) + " of " + std::to_string(n_mc) +
                          " evaluations failed");
    res.value = sum.value() / static_cast<double>(res.used);
    return res;
}

}  // namespace cam
