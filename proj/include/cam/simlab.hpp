#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cam/dataset.hpp"
#include "cam/kde.hpp"
#include "cam/rng.hpp"
#include "cam/stats.hpp"

namespace cam {

enum class ModelId {
    toy_gaussian,
    density_1,
    density_2,
    density_3,
    regression_1,
    regression_2,
    regression_3,
    example_joint,
};

/// Accepts the canonical names plus the aliases example1 and example2.
ModelId parse_model(const std::string& name);
std::string to_string(ModelId id);
int model_dimension(ModelId id);
bool is_density_model(ModelId id);
bool is_regression_model(ModelId id);

struct ModelSpec {
    ModelId id = ModelId::example_joint;
    std::size_t n = 1000;
    // MCAR probability of each listed pattern; the remainder is complete.
    std::vector<std::pair<Pattern, double>> p_miss;
    double sigma = 0.2;                                // example_joint noise sd
    Eigen::Vector2d toy_mean = Eigen::Vector2d(1, 1);  // toy_gaussian
    Eigen::Matrix2d toy_cov = 0.1 * Eigen::Matrix2d::Identity() + 0.9 * Eigen::Matrix2d::Ones();
    std::uint64_t seed = 0;
};

/// Spec with the first feature missing completely at random with probability p1.
ModelSpec first_component_mcar(ModelId id, std::size_t n, double p1, std::uint64_t seed);

/// Draws the dataset. toy_gaussian returns 2n rows of (X, Y) whose second
/// half has X removed; density models carry a zero response.
MaskedDataset generate(const ModelSpec& spec);

/// One draw of the feature vector of a density or regression model.
void draw_features(ModelId id, Rng& rng, std::vector<double>& x);
double true_density(ModelId id, std::span<const double> x);
double true_regression(ModelId id, std::span<const double> x);

struct ToyVariances {
    double var_cc = 0.0;
    double var_cam = 0.0;
};

ToyVariances toy_closed_form(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, std::size_t n);

/// E(X | Y = y) for X ~ Exp(1), Y = X + sigma * eps.
double oracle_phi1_example1(double y, double sigma);

/// 1 - p1 Corr^2(X, Y) for the exponential model.
double example1_variance_ratio(double p1, double sigma);

struct ToyReport {
    std::vector<double> cc;
    std::vector<double> cam;
    double var_cc = 0.0;
    double var_cam = 0.0;
    ToyVariances closed_form;
};

ToyReport run_toy_experiment(const ModelSpec& spec, std::size_t reps, unsigned threads = 1);

enum class UStatTarget { mean, covariance };
enum class PhiChoice { practical, linear_fit, oracle };

UStatTarget parse_target(const std::string& name);
PhiChoice parse_phi_choice(const std::string& name);
std::string to_string(UStatTarget t);
std::string to_string(PhiChoice c);

struct UStatExperimentConfig {
    UStatTarget target = UStatTarget::mean;
    PhiChoice phim = PhiChoice::practical;
    double alpha = 0.05;
    std::uint64_t budget = 100000;
    std::size_t min_count = 20;
};

struct UStatReport {
    double truth = 0.0;
    std::vector<double> cc;
    std::vector<double> cam;
    std::vector<double> cam_se;
    std::vector<double> cc_se;
    std::vector<char> covered;
    Summary cc_summary;
    Summary cam_summary;
    double var_cc = 0.0;
    double var_cam = 0.0;
    double variance_ratio = 1.0;
    double coverage = 0.0;
    double cc_coverage = 0.0;
};

/// Replicates the U-statistic comparison on the example_joint model.
UStatReport run_ustat_experiment(const ModelSpec& spec, const UStatExperimentConfig& cfg, std::size_t reps,
                                 unsigned threads = 1);

struct ExperimentReport {
    std::string metric;  // "tv" or "mise"
    std::vector<double> cc;
    std::vector<double> cam;
    std::vector<double> relative;  // (cc - cam) / cc per rep
    std::vector<double> bandwidth;
    Summary relative_summary;
    Summary cc_summary;
    Summary cam_summary;
};

struct DensityExperimentConfig {
    KernelFamily family = KernelFamily::gaussian;
    double h = 0.0;  // 0 selects the rule-of-thumb bandwidth per rep
    std::size_t grid_points = 200;
    std::size_t min_count = 20;
};

ExperimentReport run_density_experiment(const ModelSpec& spec, const DensityExperimentConfig& cfg, std::size_t reps,
                                        unsigned threads = 1);

struct RegressionExperimentConfig {
    KernelFamily family = KernelFamily::gaussian;
    double h = 0.0;  // 0 selects h by leave-one-out over the default grid
    std::size_t n_mc = 10000;
    std::size_t min_count = 20;
};

ExperimentReport run_regression_experiment(const ModelSpec& spec, const RegressionExperimentConfig& cfg,
                                           std::size_t reps, unsigned threads = 1);

struct HoldoutConfig {
    std::size_t test_size = 1000;
    std::size_t train_complete = 200;
    std::size_t min_count = 20;
    KernelFamily family = KernelFamily::gaussian;
    std::uint64_t seed = 0;
};

struct HoldoutReport {
    std::vector<double> mse_cc;
    std::vector<double> mse_cam;
    std::vector<double> bandwidth;
    double cam_better_fraction = 0.0;
    Summary cc_summary;
    Summary cam_summary;
};

/// Fixed complete-case test set; each rep trains on a fresh draw of
/// complete cases plus every incomplete row, with h chosen by leave-one-out.
HoldoutReport run_holdout(const MaskedDataset& ds, const HoldoutConfig& cfg, std::size_t reps, unsigned threads = 1);

}  // namespace cam
