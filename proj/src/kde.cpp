#include "cam/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cam/stats.hpp"

namespace cam {

KernelFamily parse_family(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "box") return KernelFamily::box;
    throw Error("unsupported kernel family '" + name + "' (expected gaussian or box)");
}

std::string to_string(KernelFamily f) { return f == KernelFamily::gaussian ? "gaussian" : "box"; }

double kernel_1d(KernelFamily f, double u) noexcept {
    if (f == KernelFamily::gaussian) return std::exp(-0.5 * u * u) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    return std::abs(u) <= 1.0 ? 0.5 : 0.0;
}

double nu_1d(KernelFamily f) noexcept {
    return f == KernelFamily::gaussian ? 0.5 * std::numbers::inv_sqrtpi : 0.5;
}

double nu(KernelFamily f, int d) {
    if (d < 0) throw DimensionMismatch("kernel dimension must be nonnegative");
    if (f == KernelFamily::gaussian) return std::pow(4.0 * std::numbers::pi, -0.5 * d);
    return std::pow(0.5, d);
}

namespace {

void check_spec(const SmootherSpec& s) {
    if (!(s.h > 0.0) || !std::isfinite(s.h)) throw Error("bandwidth must be positive and finite");
    if (s.d < 0) throw DimensionMismatch("smoother dimension must be nonnegative");
}

}  // namespace

KernelConstants kernel_constants(const SmootherSpec& spec, const AdjustmentSet& adj) {
    check_spec(spec);
    KernelConstants c;
    c.nu = nu(spec.family, spec.d);
    c.patterns = adj.patterns();
    const auto k = static_cast<Eigen::Index>(adj.size());
    c.nu_m1m2 = Eigen::MatrixXd::Zero(k, k);
    for (const auto& m : c.patterns) {
        const double v = nu(spec.family, m.observed_count());
        c.nu_m.push_back(v);
        c.nu_0m.push_back(v);
        c.mu0_m.push_back(1.0);
    }
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            c.nu_m1m2(i, j) = nu(spec.family, pmax(c.patterns[i], c.patterns[j]).observed_count());
    return c;
}

SmootherSpec marginal_kernel(const SmootherSpec& spec, const Pattern& m) {
    check_spec(spec);
    if (m.d() != spec.d) throw DimensionMismatch("pattern dimension differs from smoother dimension");
    return {spec.family, spec.h, m.observed_count()};
}

double kde_point(const ProjectedSample& sample, std::span<const double> x, const SmootherSpec& spec) {
    check_spec(spec);
    if (sample.size() == 0) throw InsufficientData("density estimate of an empty sample");
    if (sample.dim() != spec.d || x.size() != static_cast<std::size_t>(spec.d))
        throw DimensionMismatch("kde_point: sample, query and smoother dimensions must agree");
    if (spec.d == 0) throw DimensionMismatch("kde_point needs at least one observed coordinate");
    CompensatedSum sum;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto xi = sample.x(i);
        double k = 1.0;
        for (int j = 0; j < spec.d && k != 0.0; ++j) k *= kernel_1d(spec.family, (xi[j] - x[j]) / spec.h);
        sum.add(k);
    }
    return sum.value() / (static_cast<double>(sample.size()) * std::pow(spec.h, spec.d));
}

CamDensityModel::CamDensityModel(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                                 const SmootherSpec& spec)
    : spec_(spec) {
    check_spec(spec);
    if (spec.d != ds.d()) throw DimensionMismatch("smoother dimension differs from dataset dimension");
    if (groups.n0() == 0) throw InsufficientData("no complete cases");
    complete_ = project(ds, groups.complete(), Pattern::complete(ds.d()));
    const auto consts = kernel_constants(spec, adj);
    for (std::size_t k = 0; k < adj.size(); ++k) {
        const auto& e = adj.entries[k];
        if (e.rows.empty()) throw InsufficientData("pattern " + e.pattern.to_string() + " has no rows");
        if (e.pattern.observed_count() == 0) {
            warnings_.push_back("pattern " + e.pattern.to_string() + " observes no features; skipped");
            continue;
        }
        terms_.push_back({e.pattern, e.pattern.observed(), project(ds, groups.complete(), e.pattern),
                          project(ds, e.rows, e.pattern), consts.nu_0m[k] / consts.nu_m[k]});
    }
}

namespace {

double gamma_d(double ratio, double n0, double nm, double f0, double f0m, double fm, const Pattern& m,
               Warnings* warnings) {
    const double denom = n0 * f0m + nm * fm;
    if (!(denom > 0.0)) {
        if (warnings) warnings->push_back("pattern " + m.to_string() + ": zero pooled density, gamma set to 0");
        return 0.0;
    }
    return ratio * nm * f0 / denom;
}

}  // namespace

CamDensityResult CamDensityModel::at(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(spec_.d)) throw DimensionMismatch("query point dimension differs from d");
    CamDensityResult res;
    res.warnings = warnings_;
    res.f_cc = kde_point(complete_, x, spec_);
    const double n0 = static_cast<double>(complete_.size());
    double adj = 0.0;
    for (const auto& t : terms_) {
        const auto xm = project_point(x, t.pattern);
        const auto ms = marginal_kernel(spec_, t.pattern);
        DensityTerm dt;
        dt.pattern = t.pattern;
        dt.n_m = t.group.size();
        dt.f0m = kde_point(t.complete, xm, ms);
        dt.fm = kde_point(t.group, xm, ms);
        dt.gamma = gamma_d(t.ratio, n0, static_cast<double>(dt.n_m), res.f_cc, dt.f0m, dt.fm, t.pattern, &res.warnings);
        if (dt.gamma != 0.0) adj += dt.gamma * (dt.f0m - dt.fm);
        res.terms.push_back(dt);
    }
    res.f_cam = res.f_cc - adj;
    return res;
}

namespace {

// Separable density on a tensor grid over the given axes of a sample.
std::vector<double> grid_density(const ProjectedSample& s, const std::vector<const std::vector<double>*>& axes,
                                 const SmootherSpec& spec) {
    const auto n = static_cast<Eigen::Index>(s.size());
    const std::size_t d = axes.size();
    std::vector<Eigen::MatrixXd> factors(d);
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) {
        const auto& ax = *axes[j];
        factors[j].resize(n, static_cast<Eigen::Index>(ax.size()));
        for (Eigen::Index i = 0; i < n; ++i)
            for (std::size_t g = 0; g < ax.size(); ++g)
                factors[j](i, static_cast<Eigen::Index>(g)) =
                    kernel_1d(spec.family, (s.x(static_cast<std::size_t>(i))[j] - ax[g]) / spec.h);
        total *= ax.size();
    }
    const double scale = 1.0 / (static_cast<double>(n) * std::pow(spec.h, static_cast<double>(d)));
    std::vector<double> out(total, 0.0);
    if (d == 1) {
        Eigen::VectorXd v = factors[0].colwise().sum().transpose() * scale;
        std::copy(v.data(), v.data() + v.size(), out.begin());
    } else if (d == 2) {
        Eigen::MatrixXd m = factors[0].transpose() * factors[1] * scale;
        for (Eigen::Index a = 0; a < m.rows(); ++a)
            for (Eigen::Index b = 0; b < m.cols(); ++b) out[static_cast<std::size_t>(a * m.cols() + b)] = m(a, b);
    } else {
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double k = 1.0;
                for (std::size_t j = 0; j < d && k != 0.0; ++j) k *= factors[j](i, static_cast<Eigen::Index>(idx[j]));
                acc += k;
            }
            out[flat] = acc * scale;
            for (std::size_t j = d; j-- > 0;) {
                if (++idx[j] < axes[j]->size()) break;
                idx[j] = 0;
            }
        }
    }
    return out;
}

}  // namespace

void CamDensityModel::grid(const std::vector<std::vector<double>>& axes, std::vector<double>& f_cc,
                           std::vector<double>& f_cam) const {
    const auto d = static_cast<std::size_t>(spec_.d);
    if (axes.size() != d) throw DimensionMismatch("one grid axis is needed per feature");
    std::vector<const std::vector<double>*> all;
    std::size_t total = 1;
    for (const auto& ax : axes) {
        if (ax.empty()) throw DimensionMismatch("grid axes must be nonempty");
        all.push_back(&ax);
        total *= ax.size();
    }
    f_cc = grid_density(complete_, all, spec_);
    f_cam = f_cc;
    const double n0 = static_cast<double>(complete_.size());
    std::vector<std::size_t> strides(d, 1);
    for (std::size_t j = d - 1; j-- > 0;) strides[j] = strides[j + 1] * axes[j + 1].size();

    for (const auto& t : terms_) {
        std::vector<const std::vector<double>*> sub;
        for (int j : t.observed) sub.push_back(&axes[static_cast<std::size_t>(j)]);
        const auto ms = marginal_kernel(spec_, t.pattern);
        const auto f0m = grid_density(t.complete, sub, ms);
        const auto fm = grid_density(t.group, sub, ms);
        std::vector<std::size_t> sub_strides(sub.size(), 1);
        for (std::size_t j = sub.size() - 1; j-- > 0;) sub_strides[j] = sub_strides[j + 1] * sub[j + 1]->size();
        const double nm = static_cast<double>(t.group.size());
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t sflat = 0;
            for (std::size_t q = 0; q < t.observed.size(); ++q) {
                const auto j = static_cast<std::size_t>(t.observed[q]);
                sflat += (flat / strides[j]) % axes[j].size() * sub_strides[q];
            }
            const double g = gamma_d(t.ratio, n0, nm, f_cc[flat], f0m[sflat], fm[sflat], t.pattern, nullptr);
            if (g != 0.0) f_cam[flat] -= g * (f0m[sflat] - fm[sflat]);
        }
    }
}

CamDensityResult cam_density_at(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                                std::span<const double> x, const SmootherSpec& spec) {
    return CamDensityModel(ds, groups, adj, spec).at(x);
}

double tv_distance(std::span<const double> fhat, std::span<const double> f, double cell_volume) {
    if (fhat.size() != f.size()) throw DimensionMismatch("tv_distance: grids differ in size");
    if (!(cell_volume > 0.0)) throw Error("tv_distance: cell volume must be positive");
    CompensatedSum sum;
    for (std::size_t i = 0; i < f.size(); ++i) sum.add(std::abs(fhat[i] - f[i]));
    return 0.5 * sum.value() * cell_volume;
}

double rule_of_thumb_bandwidth(const MaskedDataset& ds, const PatternGroups& groups) {
    const auto& rows = groups.complete();
    if (rows.size() < 2) throw InsufficientData("bandwidth rule needs at least two complete cases");
    double log_sd = 0.0;
    std::vector<double> col(rows.size());
    for (int j = 0; j < ds.d(); ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = ds.x(rows[i], j);
        const double sd = std::sqrt(variance(col));
        if (!(sd > 0.0)) throw DataError("feature " + std::to_string(j + 1) + " is constant over the complete cases");
        log_sd += std::log(sd);
    }
    const double s = std::exp(log_sd / ds.d());
    return 1.06 * s * std::pow(static_cast<double>(rows.size()), -1.0 / (ds.d() + 4.0));
}

std::vector<std::vector<double>> bounding_grid(const MaskedDataset& ds, double pad, std::size_t points) {
    if (points < 2) throw Error("grid needs at least two points per axis");
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(ds.d()));
    for (int j = 0; j < ds.d(); ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < ds.n(); ++i)
            if (ds.observed(i, j)) {
                lo = std::min(lo, ds.x(i, j));
                hi = std::max(hi, ds.x(i, j));
            }
        if (!(lo <= hi)) throw InsufficientData("feature " + std::to_string(j + 1) + " is never observed");
        lo -= pad;
        hi += pad;
        auto& ax = axes[static_cast<std::size_t>(j)];
        ax.resize(points);
        for (std::size_t g = 0; g < points; ++g)
            ax[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1);
    }
    return axes;
}

}  // namespace cam
