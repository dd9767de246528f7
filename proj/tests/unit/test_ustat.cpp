#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cam/rng.hpp"
#include "cam/simlab.hpp"
#include "cam/stats.hpp"
#include "cam/ustat.hpp"
#include "../support.hpp"

using namespace cam;
using camtest::kNan;

namespace {

ProjectedSample sample1(std::vector<double> x, std::vector<double> y = {}) {
    if (y.empty()) y.assign(x.size(), 0.0);
    return ProjectedSample(1, std::move(x), std::move(y));
}

// d = 1 dataset with `n0` complete rows and `n1` rows missing X.
MaskedDataset example_like(std::size_t n0, std::size_t n1, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const double x = -std::log1p(-uniform01(rng));
        rows.push_back({i < n0 ? x : kNan, x + 0.2 * standard_normal(rng)});
    }
    return camtest::make_dataset(1, rows);
}

}  // namespace

TEST_CASE("eval_ustat examples") {
    const auto k1 = mean_kernel(1, 0);
    const auto a = eval_ustat(sample1({1, 2, 3}), k1, 100, 0);
    CHECK(a.value == 2.0);
    CHECK(a.exact);
    CHECK(a.subsets_used == 3);

    const auto cov = covariance_kernel(1, 0, -1);
    CHECK(eval_ustat(sample1({1, 2, 3}, {1, 2, 3}), cov, 100, 0).value == doctest::Approx(1.0).epsilon(1e-15));

    const auto five = eval_ustat(sample1({1, 2, 3, 4, 5}, {5, 1, 4, 2, 3}), cov, 10, 0);
    CHECK(five.exact);
    CHECK(five.subsets_used == 10);
    const auto sampled = eval_ustat(sample1({1, 2, 3, 4, 5}, {5, 1, 4, 2, 3}), cov, 9, 0);
    CHECK_FALSE(sampled.exact);
    CHECK(sampled.subsets_used == 9);

    CHECK_THROWS_AS(eval_ustat(sample1({1}), cov, 10, 0), InsufficientData);
}

TEST_CASE("built-in kernel values") {
    const auto cov = covariance_kernel(1, 0, -1);
    CHECK(eval_ustat(sample1({0, 1}, {0, 1}), cov, 10, 0).value == 0.5);
    const auto sq = response_sqdiff(Pattern::all_missing(1));
    CHECK(eval_ustat(ProjectedSample(0, {}, {0.0, 2.0}), sq, 10, 0).value == 2.0);
    CHECK(mean_kernel(2, 1).order == 1);
    CHECK(covariance_kernel(2, 0, 1).order == 2);
    CHECK_THROWS_AS(mean_kernel(2, 2), DimensionMismatch);
    CHECK_THROWS_AS(projected_mean_kernel(Pattern::from_string("10"), 0), PatternError);
}

TEST_CASE("built-in kernels are permutation symmetric") {
    Rng rng = make_rng(5);
    std::vector<double> xs, ys;
    for (int i = 0; i < 4; ++i) {
        xs.push_back(standard_normal(rng));
        xs.push_back(standard_normal(rng));
        ys.push_back(standard_normal(rng));
    }
    const ProjectedSample s(2, xs, ys);
    for (const auto& k : {covariance_kernel(2, 0, 1), covariance_kernel(2, 1, -1), response_sqdiff(Pattern::complete(2))}) {
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                const Record ab[2] = {s[i], s[j]};
                const Record ba[2] = {s[j], s[i]};
                CHECK(k.eval(ab) == k.eval(ba));
            }
    }
}

TEST_CASE("asymmetric kernels are averaged over argument orders") {
    UKernelSpec k;
    k.order = 2;
    k.pattern = Pattern::complete(1);
    k.symmetric = false;
    k.eval = [](std::span<const Record> z) { return z[0].x[0] * z[0].x[0] * z[1].x[0]; };
    const auto s = sample1({1, 2, 3, 4});
    const auto v = eval_ustat(s, k, 100, 0).value;
    // Reversed row order gives the same unordered subsets.
    const auto r = eval_ustat(sample1({4, 3, 2, 1}), k, 100, 0).value;
    CHECK(v == doctest::Approx(r).epsilon(1e-15));
    double ref = 0.0;
    int c = 0;
    for (int i = 1; i <= 4; ++i)
        for (int j = i + 1; j <= 4; ++j, ++c) ref += 0.5 * (i * i * j + j * j * i);
    CHECK(v == doctest::Approx(ref / c).epsilon(1e-15));
}

TEST_CASE("a constant kernel gives its constant") {
    const auto s = sample1({0.3, 1.7, -2.0, 5.0, 8.0});
    for (int r = 1; r <= 3; ++r) CHECK(eval_ustat(s, constant_kernel(r, Pattern::complete(1), 2.5), 7, 1).value == 2.5);
}

TEST_CASE("subsampled estimates are unbiased for the exact U-statistic") {
    Rng rng = make_rng(9);
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
        x.push_back(standard_normal(rng));
        y.push_back(x.back() + standard_normal(rng));
    }
    const ProjectedSample s(1, x, y);
    const auto k = covariance_kernel(1, 0, -1);
    const double exact = eval_ustat(s, k, 1000, 0).value;
    std::vector<double> est;
    for (std::uint64_t seed = 0; seed < 500; ++seed) est.push_back(eval_ustat(s, k, 50, seed).value);
    const auto sum = summarize(est);
    CHECK(std::abs(sum.mean - exact) <= 3.0 * sum.se_mean);
}

TEST_CASE("cc_ustat and adjustment_pair") {
    const auto ds = camtest::make_dataset(1, {{1, 1}, {2, 2}, {kNan, 5}, {kNan, 7}});
    const auto g = group_by_pattern(ds);
    CHECK(cc_ustat(ds, g, covariance_kernel(1, 0, -1)).value == 0.5);
    CHECK(cc_ustat(ds, g, mean_kernel(1, 0)).value == 1.5);

    const auto adj = select_adjustment_set(g, 1);
    const Pattern m = Pattern::all_missing(1);
    const auto [s0, s1] = adjustment_pair(ds, g, adj, m, response_identity(m));
    CHECK(s0.value == 1.5);
    CHECK(s1.value == 6.0);
    const auto [c0, c1] = adjustment_pair(ds, g, adj, m, constant_kernel(1, m, 4.0));
    CHECK(c0.value - c1.value == 0.0);
    CHECK_THROWS_AS(adjustment_pair(ds, g, adj, Pattern::complete(1), response_identity(Pattern::complete(1))),
                    PatternError);

    const auto one = camtest::make_dataset(1, {{1, 1}, {kNan, 5}});
    CHECK_THROWS_AS(cc_ustat(one, group_by_pattern(one), covariance_kernel(1, 0, -1)), InsufficientData);
}

TEST_CASE("constant adjustment kernels zero the geometry and reduce CAM to CC") {
    const auto ds = example_like(60, 40, 2);
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g);
    const Pattern m = Pattern::all_missing(1);
    const auto phi = mean_kernel(1, 0);
    const auto geo = estimate_geometry(ds, g, adj, phi, {constant_kernel(1, m, 3.0)}, 1000, 4);
    CHECK(geo.omega[0] == 0.0);
    CHECK(geo.lambda(0, 0) == 0.0);
    const auto res = cam_ustat(ds, g, adj, phi, {constant_kernel(1, m, 3.0)});
    CHECK(res.gamma[0] == 0.0);
    CHECK(res.estimate == res.cc_estimate);
    CHECK(res.ci_lo <= res.estimate);
    CHECK(res.estimate <= res.ci_hi);
}

TEST_CASE("cam_ustat interval and standard errors") {
    const auto ds = example_like(300, 300, 11);
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g);
    const Pattern m = Pattern::all_missing(1);
    UStatOptions opt;
    opt.alpha = 0.1;
    opt.seed = 3;
    const auto res = cam_ustat(ds, g, adj, mean_kernel(1, 0), {response_identity(m)}, opt);
    const double z = normal_quantile(0.95);
    CHECK(res.se >= 0.0);
    CHECK(res.se < res.cc_se);
    CHECK(res.ci_hi - res.estimate == doctest::Approx(z * res.se).epsilon(1e-12));
    CHECK(res.cc_se == doctest::Approx(std::sqrt(res.geometry.psi / 300.0)).epsilon(1e-14));
    CHECK(res.gamma[0] == doctest::Approx(res.geometry.omega[0] / res.geometry.lambda(0, 0)).epsilon(1e-12));
    CHECK(res.estimate == doctest::Approx(res.components.theta0 -
                                          res.gamma[0] * (res.components.theta0M[0] - res.components.thetaM[0]))
                              .epsilon(1e-15));
}

TEST_CASE("geometry under independence is centred at zero") {
    std::vector<double> om;
    for (std::uint64_t r = 0; r < 200; ++r) {
        Rng rng = make_rng(100 + r);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 200; ++i) rows.push_back({i < 100 ? standard_normal(rng) : kNan, standard_normal(rng)});
        const auto ds = camtest::make_dataset(1, rows);
        const auto g = group_by_pattern(ds);
        const auto adj = select_adjustment_set(g);
        om.push_back(estimate_geometry(ds, g, adj, mean_kernel(1, 0), {response_identity(Pattern::all_missing(1))},
                                       2000, r)
                         .omega[0]);
    }
    const auto s = summarize(om);
    CHECK(std::abs(s.mean) <= 3.0 * s.se_mean);
}

TEST_CASE("geometry entries use independent substreams") {
    const auto ds = example_like(80, 60, 21);
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g);
    const Pattern m = Pattern::all_missing(1);
    const auto a = estimate_geometry(ds, g, adj, mean_kernel(1, 0), {response_identity(m)}, 500, 8);
    const auto b = estimate_geometry(ds, g, adj, mean_kernel(1, 0), {response_identity(m)}, 500, 8);
    CHECK(a.psi == b.psi);
    CHECK(a.omega[0] == b.omega[0]);
    CHECK_FALSE(a.exact);
}

TEST_CASE("linear_adjustment recovers an exact linear relation") {
    std::vector<std::vector<double>> rows;
    Rng rng = make_rng(4);
    for (int i = 0; i < 80; ++i) {
        const double y = standard_normal(rng);
        rows.push_back({i < 50 ? 0.7 - 1.3 * y : kNan, y});
    }
    const auto ds = camtest::make_dataset(1, rows);
    const auto g = group_by_pattern(ds);
    const Pattern m = Pattern::all_missing(1);
    Warnings w;
    const auto k = linear_adjustment(ds, g, m, mean_kernel(1, 0), &w);
    CHECK(k.pattern == m);
    for (double y : {-2.0, 0.0, 0.5, 3.0}) {
        const double xs[1] = {};
        const Record z{std::span<const double>(xs, 0), y};
        CHECK(k.eval(std::span<const Record>(&z, 1)) == doctest::Approx(0.7 - 1.3 * y).epsilon(1e-10));
    }
    CHECK(w.empty());

    const auto c = linear_adjustment(ds, g, m, constant_kernel(1, Pattern::complete(1), 2.0));
    CHECK(c.shape.kind == KernelShape::Kind::constant);
    CHECK(c.shape.value == 2.0);
}

TEST_CASE("linear_adjustment warns on a rank-deficient design") {
    const auto ds = camtest::make_dataset(2, {{1, 2, 3}, {kNan, 1, 2}});
    const auto g = group_by_pattern(ds);
    Warnings w;
    linear_adjustment(ds, g, Pattern::from_string("10"), mean_kernel(2, 0), &w);
    REQUIRE_FALSE(w.empty());
    CHECK(w[0].find("rank-deficient") != std::string::npos);
}

TEST_CASE("linear_adjustment for a covariance target keeps the difference structure") {
    std::vector<std::vector<double>> rows;
    Rng rng = make_rng(6);
    for (int i = 0; i < 120; ++i) {
        const double y = standard_normal(rng);
        rows.push_back({i < 80 ? 2.0 * y + 1.0 : kNan, y});
    }
    const auto ds = camtest::make_dataset(1, rows);
    const auto g = group_by_pattern(ds);
    const Pattern m = Pattern::all_missing(1);
    const auto k = linear_adjustment(ds, g, m, covariance_kernel(1, 0, -1));
    CHECK(k.order == 2);
    const double none[1] = {};
    const Record z[2] = {{std::span<const double>(none, 0), 0.5}, {std::span<const double>(none, 0), -1.0}};
    // x = 2y + 1 exactly, so the surrogate is (1/2)(2 dy)(dy).
    CHECK(k.eval(z) == doctest::Approx(0.5 * 2.0 * 1.5 * 1.5).epsilon(1e-10));
    CHECK_THROWS_AS(linear_adjustment(ds, g, m, constant_kernel(3, Pattern::complete(1), 1.0)), Error);
}
