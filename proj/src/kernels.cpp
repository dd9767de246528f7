#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/QR>

#include "cam/ustat.hpp"

namespace cam {

namespace {

void check_feature(const Pattern& m, int feature) {
    if (feature < 0 || feature >= m.d())
        throw DimensionMismatch("feature index " + std::to_string(feature + 1) + " out of range for d = " +
                                std::to_string(m.d()));
    if (m.missing(feature))
        throw PatternError("feature " + std::to_string(feature + 1) + " is not observed under pattern " +
                           m.to_string());
}

// Position of a feature within records projected to m; -1 stays the response.
int local_index(const Pattern& m, int feature) {
    if (feature < 0) return -1;
    check_feature(m, feature);
    const auto obs = m.observed();
    return static_cast<int>(std::find(obs.begin(), obs.end(), feature) - obs.begin());
}

double coord(const Record& z, int idx) { return idx < 0 ? z.y : z.x[idx]; }

std::string coord_name(int feature) { return feature < 0 ? "y" : "x" + std::to_string(feature + 1); }

}  // namespace

UKernelSpec projected_mean_kernel(const Pattern& m, int feature) {
    const int a = local_index(m, feature);
    UKernelSpec k;
    k.order = 1;
    k.pattern = m;
    k.eval = [a](std::span<const Record> z) { return z[0].x[a]; };
    k.label = "mean(" + coord_name(feature) + ")";
    k.shape = {KernelShape::Kind::mean, a, -1, 0.0};
    return k;
}

UKernelSpec projected_covariance_kernel(const Pattern& m, int feature_a, int feature_b) {
    const int a = local_index(m, feature_a);
    const int b = local_index(m, feature_b);
    UKernelSpec k;
    k.order = 2;
    k.pattern = m;
    k.eval = [a, b](std::span<const Record> z) {
        return 0.5 * (coord(z[0], a) - coord(z[1], a)) * (coord(z[0], b) - coord(z[1], b));
    };
    k.label = "cov(" + coord_name(feature_a) + "," + coord_name(feature_b) + ")";
    k.shape = {KernelShape::Kind::covariance, a, b, 0.0};
    return k;
}

UKernelSpec mean_kernel(int d, int feature) { return projected_mean_kernel(Pattern::complete(d), feature); }

UKernelSpec covariance_kernel(int d, int feature_a, int feature_b) {
    return projected_covariance_kernel(Pattern::complete(d), feature_a, feature_b);
}

UKernelSpec response_moment_kernel(int d) {
    UKernelSpec k = response_identity(Pattern::complete(d));
    k.label = "mean(y)";
    return k;
}

UKernelSpec constant_kernel(int order, const Pattern& m, double c) {
    if (order < 1) throw Error("kernel order must be at least 1");
    UKernelSpec k;
    k.order = order;
    k.pattern = m;
    k.eval = [c](std::span<const Record>) { return c; };
    k.label = "constant";
    k.shape = {KernelShape::Kind::constant, -1, -1, c};
    return k;
}

UKernelSpec response_identity(const Pattern& m) {
    UKernelSpec k;
    k.order = 1;
    k.pattern = m;
    k.eval = [](std::span<const Record> z) { return z[0].y; };
    k.label = "y";
    k.shape = {KernelShape::Kind::mean, -1, -1, 0.0};
    return k;
}

UKernelSpec response_sqdiff(const Pattern& m) {
    UKernelSpec k;
    k.order = 2;
    k.pattern = m;
    k.eval = [](std::span<const Record> z) {
        const double dy = z[0].y - z[1].y;
        return 0.5 * dy * dy;
    };
    k.label = "sqdiff(y)";
    k.shape = {KernelShape::Kind::covariance, -1, -1, 0.0};
    return k;
}

namespace {

// Basis [1, y, x_k, x_k * y] for a record projected to the adjustment pattern.
void basis_row(const Record& z, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
    const auto p = static_cast<Eigen::Index>(z.x.size());
    out[0] = 1.0;
    out[1] = z.y;
    for (Eigen::Index k = 0; k < p; ++k) {
        out[2 + k] = z.x[k];
        out[2 + p + k] = z.x[k] * z.y;
    }
}

struct LinearFit {
    Eigen::VectorXd beta;
    double eval(const Record& z) const {
        const auto p = z.x.size();
        double v = beta[0] + beta[1] * z.y;
        for (std::size_t k = 0; k < p; ++k)
            v += (beta[static_cast<Eigen::Index>(2 + k)] + beta[static_cast<Eigen::Index>(2 + p + k)] * z.y) * z.x[k];
        return v;
    }
};

LinearFit fit_basis(const ProjectedSample& pm, const Eigen::VectorXd& target, const std::string& what,
                    Warnings* warnings) {
    const auto n = static_cast<Eigen::Index>(pm.size());
    const Eigen::Index cols = 2 + 2 * pm.dim();
    LinearFit fit;
    fit.beta = Eigen::VectorXd::Zero(cols);
    if (n < cols && warnings)
        warnings->push_back(what + ": rank-deficient design (" + std::to_string(n) + " complete cases for " +
                            std::to_string(cols) + " basis terms)");
    const double lo = target.minCoeff();
    const double hi = target.maxCoeff();
    if (lo == hi) {
        fit.beta[0] = lo;
        return fit;
    }
    Eigen::MatrixXd design(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) basis_row(pm[static_cast<std::size_t>(i)], design.row(i));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols && n >= cols && warnings)
        warnings->push_back(what + ": dropped " + std::to_string(cols - qr.rank()) + " collinear basis column(s)");
    fit.beta = qr.solve(target);
    return fit;
}

}  // namespace

UKernelSpec linear_adjustment(const MaskedDataset& ds, const PatternGroups& groups, const Pattern& m,
                              const UKernelSpec& target, Warnings* warnings) {
    if (m.d() != ds.d()) throw DimensionMismatch("pattern dimension differs from dataset dimension");
    const auto& a0 = groups.complete();
    if (a0.empty()) throw InsufficientData("linear adjustment needs at least one complete case");
    const auto pt = project(ds, a0, target.pattern);
    const auto pm = project(ds, a0, m);
    const auto n = static_cast<Eigen::Index>(a0.size());
    const std::string where = "linear adjustment for pattern " + m.to_string();

    if (target.order == 1) {
        Eigen::VectorXd t(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Record z = pt[static_cast<std::size_t>(i)];
            t[i] = target.eval(std::span<const Record>(&z, 1));
        }
        auto fit = std::make_shared<LinearFit>(fit_basis(pm, t, where, warnings));
        UKernelSpec k;
        k.order = 1;
        k.pattern = m;
        k.label = "linear[" + target.label + "]";
        if (fit->beta.tail(fit->beta.size() - 1).isZero(0.0)) {
            k.shape = {KernelShape::Kind::constant, -1, -1, fit->beta[0]};
            const double c = fit->beta[0];
            k.eval = [c](std::span<const Record>) { return c; };
        } else {
            k.eval = [fit](std::span<const Record> z) { return fit->eval(z[0]); };
        }
        return k;
    }

    if (target.order != 2 || target.shape.kind != KernelShape::Kind::covariance)
        throw Error("linear adjustment supports order-1 targets and covariance-shaped order-2 targets");

    // Each factor of the half product of differences uses the coordinate
    // itself when observed under m, otherwise its least-squares fit.
    const auto tobs = target.pattern.observed();
    const auto mobs = m.observed();
    auto make_factor = [&](int local) -> std::function<double(const Record&)> {
        if (local < 0) return [](const Record& z) { return z.y; };
        const int feature = tobs[static_cast<std::size_t>(local)];
        if (!m.missing(feature)) {
            const auto pos = static_cast<std::size_t>(std::find(mobs.begin(), mobs.end(), feature) - mobs.begin());
            return [pos](const Record& z) { return z.x[pos]; };
        }
        Eigen::VectorXd t(n);
        for (Eigen::Index i = 0; i < n; ++i) t[i] = pt.x(static_cast<std::size_t>(i))[static_cast<std::size_t>(local)];
        auto fit = std::make_shared<LinearFit>(
            fit_basis(pm, t, where + " (x" + std::to_string(feature + 1) + ")", warnings));
        return [fit](const Record& z) { return fit->eval(z); };
    };
    auto fa = make_factor(target.shape.a);
    auto fb = make_factor(target.shape.b);
    UKernelSpec k;
    k.order = 2;
    k.pattern = m;
    k.label = "linear[" + target.label + "]";
    k.eval = [fa, fb](std::span<const Record> z) {
        return 0.5 * (fa(z[0]) - fa(z[1])) * (fb(z[0]) - fb(z[1]));
    };
    return k;
}

}  // namespace cam
