#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cam/cam_core.hpp"
#include "cam/dataset.hpp"
#include "cam/error.hpp"

namespace cam {

using KernelFn = std::function<double(std::span<const Record>)>;

// Structural tag used by linear_adjustment. Coordinates are indices into the
// kernel's projected record, with -1 meaning the response.
struct KernelShape {
    enum class Kind { generic, mean, covariance, constant } kind = Kind::generic;
    int a = -1;
    int b = -1;
    double value = 0.0;
};

struct UKernelSpec {
    int order = 1;
    Pattern pattern;
    KernelFn eval;
    std::string label;
    KernelShape shape;
    // When false the engine averages every argument ordering.
    bool symmetric = true;
};

struct UStatEstimate {
    double value = 0.0;
    bool exact = false;
    std::uint64_t subsets_used = 0;
};

struct UGeometryEstimate {
    std::vector<Pattern> patterns;
    Eigen::VectorXd omega;
    Eigen::MatrixXd lambda;
    double psi = 0.0;
    std::uint64_t budget = 0;
    bool exact = true;  // every entry fully enumerated
};

struct UStatOptions {
    double alpha = 0.05;
    std::uint64_t budget = 100000;             // geometry subsets per entry
    std::uint64_t estimate_budget = 50000000;  // subsets for point estimates
    std::uint64_t seed = 0;
};

struct CamUStatResult {
    double estimate = 0.0;
    Eigen::VectorXd gamma;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double alpha = 0.05;
    double cc_estimate = 0.0;
    double cc_se = 0.0;
    double cc_ci_lo = 0.0;
    double cc_ci_hi = 0.0;
    std::size_t n0 = 0;
    std::vector<std::size_t> group_sizes;
    CamComponents components;
    UGeometryEstimate geometry;
    Warnings warnings;
};

// Built-in kernels. Feature indices are 0-based over the full d features.
UKernelSpec mean_kernel(int d, int feature);
/// Half product of differences of two coordinates; feature_b = -1 is the response.
UKernelSpec covariance_kernel(int d, int feature_a, int feature_b);
UKernelSpec response_moment_kernel(int d);
UKernelSpec constant_kernel(int order, const Pattern& m, double c);
/// phi_m(y) = y on pattern m.
UKernelSpec response_identity(const Pattern& m);
/// phi_m(y1, y2) = (y1 - y2)^2 / 2 on pattern m.
UKernelSpec response_sqdiff(const Pattern& m);
/// Mean of an observed feature, evaluated on pattern m.
UKernelSpec projected_mean_kernel(const Pattern& m, int feature);
/// Covariance of two coordinates observed under m (feature_b = -1 is the response).
UKernelSpec projected_covariance_kernel(const Pattern& m, int feature_a, int feature_b);

UStatEstimate eval_ustat(const ProjectedSample& sample, const UKernelSpec& k, std::uint64_t budget,
                         std::uint64_t seed);

UStatEstimate cc_ustat(const MaskedDataset& ds, const PatternGroups& groups, const UKernelSpec& phi,
                       std::uint64_t budget = 50000000, std::uint64_t seed = 0);

std::pair<UStatEstimate, UStatEstimate> adjustment_pair(const MaskedDataset& ds, const PatternGroups& groups,
                                                        const AdjustmentSet& adj, const Pattern& m,
                                                        const UKernelSpec& phim,
                                                        std::uint64_t budget = 50000000,
                                                        std::uint64_t seed = 0);

/// Value of the order-(4r-2) product-of-differences integrand on a sorted
/// subset, with `first` evaluated on `pa` and `second` on `pb`.
double geometry_integrand(const UKernelSpec& first, const ProjectedSample& pa, const UKernelSpec& second,
                          const ProjectedSample& pb, std::span<const std::size_t> subset);

/// Average of geometry_integrand over subsets of the pooled rows.
UStatEstimate geometry_entry(const UKernelSpec& first, const ProjectedSample& pa, const UKernelSpec& second,
                             const ProjectedSample& pb, std::uint64_t budget, std::uint64_t seed);

UGeometryEstimate estimate_geometry(const MaskedDataset& ds, const PatternGroups& groups,
                                    const AdjustmentSet& adj, const UKernelSpec& phi,
                                    const std::vector<UKernelSpec>& phims, std::uint64_t budget = 100000,
                                    std::uint64_t seed = 0);

CamUStatResult cam_ustat(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                         const UKernelSpec& phi, const std::vector<UKernelSpec>& phims,
                         const UStatOptions& opt = {});

/// Least-squares surrogate of E{phi | Z^m} on the basis
/// [1, y, x_k, x_k * y] over the coordinates observed under m, fit on the
/// complete cases. Order-2 targets must be covariance-shaped.
UKernelSpec linear_adjustment(const MaskedDataset& ds, const PatternGroups& groups, const Pattern& m,
                              const UKernelSpec& target, Warnings* warnings = nullptr);

}  // namespace cam
