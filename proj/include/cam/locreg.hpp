#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cam/dataset.hpp"
#include "cam/error.hpp"
#include "cam/kde.hpp"
#include "cam/rng.hpp"

namespace cam {

constexpr double kMinLocalMass = 1e-300;

struct LocalWeights {
    std::vector<double> weights;  // sequential sum is exactly 1
    double rawmass = 0.0;
};

LocalWeights local_weights(const ProjectedSample& sample, std::span<const double> x_m, const SmootherSpec& spec);

double loccon_point(const ProjectedSample& sample, std::span<const double> x_m, const SmootherSpec& spec);

double local_variance(const ProjectedSample& sample, std::span<const double> x_m, const SmootherSpec& spec,
                      double eta_hat);

struct RegressionTerm {
    Pattern pattern;
    std::size_t n_m = 0;
    bool excluded = false;
    double eta0m = 0.0;
    double etam = 0.0;
    double gamma = 0.0;
    double sigma2_m = 0.0;
};

struct CamRegressionResult {
    double eta_cam = 0.0;
    double eta_cc = 0.0;
    double sigma2_hat = 0.0;
    std::vector<RegressionTerm> terms;
    Warnings warnings;
};

/// Projected samples for repeated CAM local-constant fits. All fits are
/// computed relative to one anchor response, so shifting every response by
/// an exactly representable constant shifts each fitted value by it.
class CamRegressionModel {
public:
    CamRegressionModel(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                       const SmootherSpec& spec);

    /// Throws NoLocalData when the complete-case fit has no local mass.
    CamRegressionResult at(std::span<const double> x) const;
    double cc_at(std::span<const double> x) const;

    const SmootherSpec& spec() const noexcept { return spec_; }
    double anchor() const noexcept { return anchor_; }

private:
    struct Term {
        Pattern pattern;
        ProjectedSample complete;
        ProjectedSample group;
        ProjectedSample pooled;
        double ratio = 1.0;  // nu_0m * mu_0m / nu_m
    };

    SmootherSpec spec_;
    double anchor_ = 0.0;
    ProjectedSample complete_;
    std::vector<Term> terms_;
    Warnings warnings_;
};

CamRegressionResult cam_regress_at(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                                   std::span<const double> x, const SmootherSpec& spec);

struct LoocvResult {
    double h = 0.0;
    std::vector<double> grid;
    std::vector<double> sse;
    std::vector<std::size_t> failures;
    Warnings warnings;
};

/// Leave-one-out choice over the complete cases. Candidates compare by
/// (failed fits, squared error); exact ties go to the smaller bandwidth.
LoocvResult loocv_bandwidth(const MaskedDataset& ds, const PatternGroups& groups, const std::vector<double>& grid,
                            KernelFamily family);

/// h_rot * 2^t for 16 values of t evenly spaced on [-2, 1].
std::vector<double> default_bandwidth_grid(const MaskedDataset& ds, const PatternGroups& groups);

using PointFn = std::function<double(std::span<const double>)>;
using PointSampler = std::function<void(Rng&, std::vector<double>&)>;

struct MiseResult {
    double value = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;
};

/// Monte Carlo mean of (etahat - eta)^2 over draws of X. Draws where etahat
/// throws cam::Error are skipped; more than 10% skipped is an error.
MiseResult mise(const PointFn& etahat, const PointFn& eta, const PointSampler& sampler, std::size_t n_mc,
                std::uint64_t seed);

}  // namespace cam
