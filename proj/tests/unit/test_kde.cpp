#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cam/kde.hpp"
#include "cam/rng.hpp"
#include "cam/simlab.hpp"
#include "../support.hpp"

using namespace cam;
using camtest::kNan;

TEST_CASE("kernel constants") {
    CHECK(nu(KernelFamily::gaussian, 1) == doctest::Approx(0.2820948).epsilon(1e-7));
    CHECK(nu(KernelFamily::box, 3) == doctest::Approx(std::pow(4.0, -3) * 8.0).epsilon(1e-15));
    // Quadrature of the squared 1-d factors.
    for (auto f : {KernelFamily::gaussian, KernelFamily::box}) {
        double s = 0.0;
        const double step = 1e-4;
        for (double u = -10.0; u < 10.0; u += step) s += kernel_1d(f, u + step / 2) * kernel_1d(f, u + step / 2) * step;
        CHECK(s == doctest::Approx(nu_1d(f)).epsilon(1e-6));
    }

    std::vector<std::vector<double>> rows{{1, 1, 1, 0}, {kNan, 1, 1, 0}, {kNan, kNan, 1, 0}, {1, kNan, kNan, 0}};
    const auto g = group_by_pattern(camtest::make_dataset(3, rows));
    const auto adj = select_adjustment_set(g, 1);
    const auto c = kernel_constants({KernelFamily::gaussian, 0.5, 3}, adj);
    REQUIRE(c.patterns.size() == 3);
    for (std::size_t k = 0; k < c.patterns.size(); ++k) {
        CHECK(c.nu_0m[k] / c.nu_m[k] == 1.0);
        CHECK(c.mu0_m[k] == 1.0);
        CHECK(c.nu_m[k] == nu(KernelFamily::gaussian, c.patterns[k].observed_count()));
    }
    // Patterns 011 and 110 share only feature 2... their common observed set is feature 2.
    const auto i = static_cast<Eigen::Index>(*adj.index_of(Pattern::from_string("011")));
    const auto j = static_cast<Eigen::Index>(*adj.index_of(Pattern::from_string("110")));
    CHECK(c.nu_m1m2(i, j) == nu(KernelFamily::gaussian, 0));
    const auto k2 = static_cast<Eigen::Index>(*adj.index_of(Pattern::from_string("100")));
    CHECK(c.nu_m1m2(k2, j) == nu(KernelFamily::gaussian, 1));
}

TEST_CASE("marginal_kernel") {
    const SmootherSpec s{KernelFamily::gaussian, 0.4, 2};
    const auto m = marginal_kernel(s, Pattern::from_string("10"));
    CHECK(m.d == 1);
    CHECK(m.h == 0.4);
    CHECK(marginal_kernel(s, Pattern::complete(2)).d == 2);
    CHECK(marginal_kernel({KernelFamily::box, 1.0, 3}, Pattern::from_string("110")).family == KernelFamily::box);
}

TEST_CASE("kde_point values") {
    const ProjectedSample one(1, {2.0}, {0.0});
    const double x = 2.0;
    const auto at = [&](double h) { return kde_point(one, std::span<const double>(&x, 1), {KernelFamily::gaussian, h, 1}); };
    CHECK(at(1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
    CHECK(at(2.0) == doctest::Approx(at(1.0) / 2.0).epsilon(1e-15));
    const double far = 200.0;
    CHECK(kde_point(one, std::span<const double>(&far, 1), {KernelFamily::gaussian, 1.0, 1}) < 1e-12);
    CHECK_THROWS_AS(kde_point(ProjectedSample(1, {}, {}), std::span<const double>(&x, 1), {KernelFamily::gaussian, 1, 1}),
                    InsufficientData);
}

TEST_CASE("kde_point is a density") {
    Rng rng = make_rng(12);
    std::vector<double> xs;
    for (int i = 0; i < 50; ++i) xs.push_back(standard_normal(rng));
    const ProjectedSample s(1, xs, std::vector<double>(xs.size(), 0.0));
    double mass = 0.0;
    const double step = 0.01;
    for (double u = -12.0; u < 12.0; u += step) {
        const double v = kde_point(s, std::span<const double>(&u, 1), {KernelFamily::gaussian, 0.3, 1});
        CHECK(v >= 0.0);
        mass += v * step;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("cam_density_at reduces to complete-case when adjustments vanish") {
    // Incomplete rows duplicate the complete rows' observed coordinates.
    std::vector<std::vector<double>> rows;
    Rng rng = make_rng(8);
    for (int i = 0; i < 30; ++i) {
        const double a = standard_normal(rng), b = standard_normal(rng);
        rows.push_back({a, b, 0});
        rows.push_back({kNan, b, 0});
    }
    const auto ds = camtest::make_dataset(2, rows);
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g);
    const std::vector<double> x{0.2, -0.1};
    const auto r = cam_density_at(ds, g, adj, x, {KernelFamily::gaussian, 0.5, 2});
    REQUIRE(r.terms.size() == 1);
    CHECK(r.terms[0].f0m == r.terms[0].fm);
    CHECK(r.f_cam == r.f_cc);
    // Gaussian constants cancel: gamma = n_m f0 / (n0 f0m + n_m fm).
    const auto& t = r.terms[0];
    CHECK(t.gamma == doctest::Approx(30.0 * r.f_cc / (30.0 * t.f0m + 30.0 * t.fm)).epsilon(1e-14));
}

TEST_CASE("gamma_D bounds and limits") {
    Rng rng = make_rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> rows;
        const int nm = 1 + trial * 4;
        for (int i = 0; i < 200 + nm; ++i)
            rows.push_back({i < 200 ? standard_normal(rng) : kNan, standard_normal(rng), 0});
        const auto ds = camtest::make_dataset(2, rows);
        const auto g = group_by_pattern(ds);
        const auto adj = select_adjustment_set(g, 1);
        const std::vector<double> x{standard_normal(rng), standard_normal(rng)};
        const auto r = cam_density_at(ds, g, adj, x, {KernelFamily::gaussian, 0.4, 2});
        const auto& t = r.terms[0];
        CHECK(t.gamma >= 0.0);
        if (t.fm > 0.0) CHECK(t.gamma <= r.f_cc / t.fm * (1.0 + 1e-12));
        CHECK(t.gamma <= nm * r.f_cc / (200.0 * t.f0m) * (1.0 + 1e-12));
    }
    // A single incomplete row among many complete ones barely moves the estimate.
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20000; ++i) rows.push_back({standard_normal(rng), standard_normal(rng), 0});
    rows.push_back({kNan, 0.0, 0});
    const auto ds = camtest::make_dataset(2, rows);
    const auto g = group_by_pattern(ds);
    const auto r = cam_density_at(ds, g, select_adjustment_set(g, 1), std::vector<double>{0.0, 0.0},
                                  {KernelFamily::gaussian, 0.5, 2});
    CHECK(r.terms[0].gamma < 1e-3);
}

TEST_CASE("zero pooled density sets gamma to zero with a warning") {
    const auto ds = camtest::make_dataset(2, {{0, 0, 0}, {0.1, 0.1, 0}, {kNan, 0.05, 0}});
    const auto g = group_by_pattern(ds);
    const auto r = cam_density_at(ds, g, select_adjustment_set(g, 1), std::vector<double>{10.0, 10.0},
                                  {KernelFamily::box, 0.5, 2});
    CHECK(r.terms[0].gamma == 0.0);
    CHECK(r.f_cam == r.f_cc);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("patterns without observed features are skipped") {
    const auto ds = camtest::make_dataset(1, {{0, 0}, {1, 0}, {kNan, 0}});
    const auto g = group_by_pattern(ds);
    const auto r = cam_density_at(ds, g, select_adjustment_set(g, 1), std::vector<double>{0.5},
                                  {KernelFamily::gaussian, 1.0, 1});
    CHECK(r.terms.empty());
    CHECK(r.f_cam == r.f_cc);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("grid evaluation matches pointwise evaluation") {
    const auto ds = generate(first_component_mcar(ModelId::density_3, 150, 0.4, 3));
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g);
    const SmootherSpec spec{KernelFamily::gaussian, 0.3, 2};
    const CamDensityModel model(ds, g, adj, spec);
    const auto axes = bounding_grid(ds, 0.9, 7);
    std::vector<double> fcc, fcam;
    model.grid(axes, fcc, fcam);
    REQUIRE(fcc.size() == 49);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            const auto r = model.at(std::vector<double>{axes[0][i], axes[1][j]});
            CHECK(fcc[i * 7 + j] == doctest::Approx(r.f_cc).epsilon(1e-12));
            CHECK(fcam[i * 7 + j] == doctest::Approx(r.f_cam).epsilon(1e-12));
        }
}

TEST_CASE("tv_distance") {
    std::vector<double> a(100, 1.0);
    CHECK(tv_distance(a, a, 0.01) == 0.0);
    const int n = 1500;
    std::vector<double> f(n), g(n);
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) * 1.5 / n;
        f[i] = u <= 1.0 ? 1.0 : 0.0;
        g[i] = u >= 0.5 ? 1.0 : 0.0;
    }
    CHECK(tv_distance(f, g, 1.5 / n) == doctest::Approx(0.5).epsilon(0.02));
    std::vector<double> f2, g2;
    for (int i = 0; i < n; ++i) {
        f2.insert(f2.end(), {f[i], f[i]});
        g2.insert(g2.end(), {g[i], g[i]});
    }
    CHECK(tv_distance(f2, g2, 0.75 / n) == doctest::Approx(tv_distance(f, g, 1.5 / n)).epsilon(1e-12));
    CHECK_THROWS_AS(tv_distance(f, a, 1.0), DimensionMismatch);
}
