#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cam/dataset.hpp"
#include "cam/error.hpp"

namespace cam {

enum class KernelFamily { gaussian, box };

KernelFamily parse_family(const std::string& name);
std::string to_string(KernelFamily f);

// Product kernel with one scalar bandwidth in dimension d.
struct SmootherSpec {
    KernelFamily family = KernelFamily::gaussian;
    double h = 1.0;
    int d = 1;
};

/// One-dimensional kernel factor: standard normal density or 1/2 on [-1, 1].
double kernel_1d(KernelFamily f, double u) noexcept;
/// Integral of the squared 1-d factor.
double nu_1d(KernelFamily f) noexcept;
/// Integral of the squared d-dimensional product kernel.
double nu(KernelFamily f, int d);

struct KernelConstants {
    double nu = 0.0;
    std::vector<Pattern> patterns;
    std::vector<double> nu_m;
    std::vector<double> nu_0m;
    std::vector<double> mu0_m;
    Eigen::MatrixXd nu_m1m2;
};

KernelConstants kernel_constants(const SmootherSpec& spec, const AdjustmentSet& adj);

SmootherSpec marginal_kernel(const SmootherSpec& spec, const Pattern& m);

/// Kernel density estimate of the sample at x (sample dimension = spec.d).
double kde_point(const ProjectedSample& sample, std::span<const double> x, const SmootherSpec& spec);

struct DensityTerm {
    Pattern pattern;
    std::size_t n_m = 0;
    double f0m = 0.0;
    double fm = 0.0;
    double gamma = 0.0;
};

struct CamDensityResult {
    double f_cam = 0.0;
    double f_cc = 0.0;
    std::vector<DensityTerm> terms;
    Warnings warnings;
};

/// Projected samples and constants for repeated evaluation of the CAM density.
class CamDensityModel {
public:
    CamDensityModel(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                    const SmootherSpec& spec);

    CamDensityResult at(std::span<const double> x) const;

    /// Tensor grid evaluation; axes[j] lists the coordinates along feature j
    /// and outputs are row-major with the last axis fastest.
    void grid(const std::vector<std::vector<double>>& axes, std::vector<double>& f_cc,
              std::vector<double>& f_cam) const;

    const SmootherSpec& spec() const noexcept { return spec_; }
    const Warnings& warnings() const noexcept { return warnings_; }
    std::size_t n0() const noexcept { return complete_.size(); }

private:
    struct Term {
        Pattern pattern;
        std::vector<int> observed;
        ProjectedSample complete;
        ProjectedSample group;
        double ratio = 1.0;  // nu_0m / nu_m
    };

    SmootherSpec spec_;
    ProjectedSample complete_;
    std::vector<Term> terms_;
    Warnings warnings_;
};

CamDensityResult cam_density_at(const MaskedDataset& ds, const PatternGroups& groups, const AdjustmentSet& adj,
                                std::span<const double> x, const SmootherSpec& spec);

/// Half the L1 distance between two gridded densities (midpoint rule).
double tv_distance(std::span<const double> fhat, std::span<const double> f, double cell_volume);

/// Normal-reference bandwidth 1.06 * s * n0^(-1/(d+4)), s the geometric mean
/// of the per-coordinate standard deviations of the complete cases.
double rule_of_thumb_bandwidth(const MaskedDataset& ds, const PatternGroups& groups);

/// Per-axis grids over the observed data range widened by pad on each side.
std::vector<std::vector<double>> bounding_grid(const MaskedDataset& ds, double pad, std::size_t points);

}  // namespace cam
