#include "cam/simlab.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cam/error.hpp"

namespace cam {

namespace {

struct ModelName {
    ModelId id;
    const char* name;
};

constexpr ModelName kModels[] = {
    {ModelId::toy_gaussian, "toy_gaussian"}, {ModelId::density_1, "density_1"},
    {ModelId::density_2, "density_2"},       {ModelId::density_3, "density_3"},
    {ModelId::regression_1, "regression_1"}, {ModelId::regression_2, "regression_2"},
    {ModelId::regression_3, "regression_3"}, {ModelId::example_joint, "example_joint"},
};

Eigen::Matrix2d equicorrelated(double diag_part, double ones_part) {
    return diag_part * Eigen::Matrix2d::Identity() + ones_part * Eigen::Matrix2d::Ones();
}

void draw_gaussian2(Rng& rng, const Eigen::Matrix2d& cov, std::vector<double>& x) {
    const Eigen::Matrix2d l = cov.llt().matrixL();
    const Eigen::Vector2d z(standard_normal(rng), standard_normal(rng));
    const Eigen::Vector2d v = l * z;
    x = {v[0], v[1]};
}

double gaussian2_pdf(const Eigen::Matrix2d& cov, std::span<const double> x) {
    const Eigen::Vector2d v(x[0], x[1]);
    const double q = v.dot(cov.inverse() * v);
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
}

}  // namespace

ModelId parse_model(const std::string& name) {
    if (name == "example1" || name == "example2") return ModelId::example_joint;
    for (const auto& m : kModels)
        if (name == m.name) return m.id;
    throw Error("unknown model id '" + name + "'");
}

std::string to_string(ModelId id) {
    for (const auto& m : kModels)
        if (m.id == id) return m.name;
    return "unknown";
}

int model_dimension(ModelId id) {
    switch (id) {
        case ModelId::density_1:
        case ModelId::density_2:
        case ModelId::density_3:
        case ModelId::regression_3:
            return 2;
        case ModelId::regression_1:
        case ModelId::regression_2:
            return 3;
        case ModelId::toy_gaussian:
        case ModelId::example_joint:
            return 1;
    }
    return 1;
}

bool is_density_model(ModelId id) {
    return id == ModelId::density_1 || id == ModelId::density_2 || id == ModelId::density_3;
}

bool is_regression_model(ModelId id) {
    return id == ModelId::regression_1 || id == ModelId::regression_2 || id == ModelId::regression_3;
}

ModelSpec first_component_mcar(ModelId id, std::size_t n, double p1, std::uint64_t seed) {
    ModelSpec s;
    s.id = id;
    s.n = n;
    s.seed = seed;
    if (id != ModelId::toy_gaussian && p1 > 0.0) s.p_miss.emplace_back(Pattern(1, model_dimension(id)), p1);
    return s;
}

void draw_features(ModelId id, Rng& rng, std::vector<double>& x) {
    switch (id) {
        case ModelId::density_1:
            draw_gaussian2(rng, equicorrelated(0.3, 0.7), x);
            return;
        case ModelId::density_2: {
            double a = 0.0, b = 0.0;
            do {
                a = 2.0 * uniform01(rng) - 1.0;
                b = 2.0 * uniform01(rng) - 1.0;
            } while (a * a + b * b > 1.0);
            x = {a, b};
            return;
        }
        case ModelId::density_3: {
            const bool left = uniform01(rng) < 0.25;
            const double a = uniform01(rng) + (left ? -2.0 : 1.0);
            x = {a, uniform01(rng) - 0.5};
            return;
        }
        case ModelId::regression_1:
        case ModelId::regression_2:
            x = {uniform01(rng), uniform01(rng), uniform01(rng)};
            return;
        case ModelId::regression_3:
            draw_gaussian2(rng, equicorrelated(0.3, 0.8), x);
            return;
        default:
            throw Error("draw_features: model " + to_string(id) + " has no feature sampler");
    }
}

double true_density(ModelId id, std::span<const double> x) {
    if (x.size() != 2) throw DimensionMismatch("density models are two-dimensional");
    switch (id) {
        case ModelId::density_1:
            return gaussian2_pdf(equicorrelated(0.3, 0.7), x);
        case ModelId::density_2:
            return x[0] * x[0] + x[1] * x[1] <= 1.0 ? 1.0 / std::numbers::pi : 0.0;
        case ModelId::density_3: {
            if (std::abs(x[1]) > 0.5) return 0.0;
            if (x[0] >= -2.0 && x[0] <= -1.0) return 0.25;
            if (x[0] >= 1.0 && x[0] <= 2.0) return 0.75;
            return 0.0;
        }
        default:
            throw Error("true_density: " + to_string(id) + " is not a density model");
    }
}

double true_regression(ModelId id, std::span<const double> x) {
    switch (id) {
        case ModelId::regression_1:
            return x[0] + x[1];
        case ModelId::regression_2:
            return (x[0] - x[1]) * (x[0] - x[1]);
        case ModelId::regression_3:
            return std::sin(2.0 * x[0]);
        default:
            throw Error("true_regression: " + to_string(id) + " is not a regression model");
    }
}

MaskedDataset generate(const ModelSpec& spec) {
    const int d = model_dimension(spec.id);
    double total = 0.0;
    for (const auto& [m, p] : spec.p_miss) {
        if (m.d() != d) throw DimensionMismatch("missingness pattern has the wrong dimension");
        if (!(p >= 0.0 && p <= 1.0)) throw Error("missingness probabilities must lie in [0, 1]");
        total += p;
    }
    if (total > 1.0 + 1e-12) throw Error("missingness probabilities sum to more than 1");

    Rng rng = make_rng(spec.seed);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> x;

    if (spec.id == ModelId::toy_gaussian) {
        const Eigen::Matrix2d l = spec.toy_cov.llt().matrixL();
        for (std::size_t i = 0; i < 2 * spec.n; ++i) {
            const Eigen::Vector2d v = spec.toy_mean + l * Eigen::Vector2d(standard_normal(rng), standard_normal(rng));
            xs.push_back(i < spec.n ? v[0] : nan);
            ys.push_back(v[1]);
        }
        return MaskedDataset(1, std::move(xs), std::move(ys));
    }

    for (std::size_t i = 0; i < spec.n; ++i) {
        double y = 0.0;
        if (spec.id == ModelId::example_joint) {
            const double v = -std::log1p(-uniform01(rng));
            x = {v};
            y = v + spec.sigma * standard_normal(rng);
        } else {
            draw_features(spec.id, rng, x);
            if (spec.id == ModelId::regression_1 || spec.id == ModelId::regression_2)
                y = true_regression(spec.id, x) + 0.1 * standard_normal(rng);
            else if (spec.id == ModelId::regression_3)
                y = true_regression(spec.id, x) + 0.3 * standard_normal(rng);
        }
        const double u = uniform01(rng);
        double acc = 0.0;
        for (const auto& [m, p] : spec.p_miss) {
            acc += p;
            if (u < acc) {
                for (int j = 0; j < d; ++j)
                    if (m.missing(j)) x[static_cast<std::size_t>(j)] = nan;
                break;
            }
        }
        xs.insert(xs.end(), x.begin(), x.end());
        ys.push_back(y);
    }
    return MaskedDataset(d, std::move(xs), std::move(ys));
}

ToyVariances toy_closed_form(const Eigen::Vector2d&, const Eigen::Matrix2d& cov, std::size_t n) {
    if (n == 0) throw Error("toy model needs n >= 1");
    if (!(cov.determinant() > 0.0) || !(cov(0, 0) > 0.0)) throw Error("toy covariance must be positive definite");
    const double nn = static_cast<double>(n);
    return {cov(0, 0) / nn, (cov(0, 0) - cov(0, 1) * cov(0, 1) / (2.0 * cov(1, 1))) / nn};
}

namespace {

// lambda(a) - a with lambda the inverse Mills ratio phi(a) / (1 - Phi(a)).
double mills_excess(double a) {
    if (a > 8.0) {
        // Continued fraction 1 / (a + 2 / (a + 3 / (a + ...))).
        double t = a;
        for (int k = 200; k >= 1; --k) t = a + (k + 1) / t;
        return 1.0 / t;
    }
    const double q = 0.5 * std::erfc(a / std::numbers::sqrt2);
    const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
    return phi / q - a;
}

}  // namespace

double oracle_phi1_example1(double y, double sigma) {
    if (!(sigma > 0.0)) throw Error("sigma must be positive");
    return sigma * mills_excess(sigma - y / sigma);
}

double example1_variance_ratio(double p1, double sigma) { return 1.0 - p1 / (1.0 + sigma * sigma); }

}  // namespace cam
