#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cam/cam_core.hpp"
#include "cam/resample.hpp"
#include "cam/rng.hpp"
#include "cam/stats.hpp"
#include "../support.hpp"

using namespace cam;
using camtest::kNan;

namespace {

double sample_mean(const ProjectedSample& s) {
    double t = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) t += s.y(i);
    return t / static_cast<double>(s.size());
}

double sample_median(const ProjectedSample& s) {
    std::vector<double> v;
    for (std::size_t i = 0; i < s.size(); ++i) v.push_back(s.y(i));
    return median(v);
}

MaskedDataset groups_of(const std::vector<double>& y0, const std::vector<double>& ym) {
    std::vector<std::vector<double>> rows;
    for (double v : y0) rows.push_back({1.0, v});
    for (double v : ym) rows.push_back({kNan, v});
    return camtest::make_dataset(1, rows);
}

}  // namespace

TEST_CASE("equal group sizes use both groups once") {
    const auto ds = groups_of({1, 2, 3}, {4, 5, 9});
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g, 1);
    const auto b = balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_median);
    CHECK(b.subsample_size == 3);
    CHECK(b.theta0m_bar == 2.0);
    CHECK(b.thetam_bar == 5.0);
    CHECK(b.draws0 == 1);
    CHECK(b.drawsm == 1);
    CHECK(b.exact0);
    CHECK(b.exactm);
}

TEST_CASE("exhaustive subsampling of the larger group") {
    const std::vector<double> y0{1, 2, 4, 8, 16, 32};
    const auto ds = groups_of(y0, {0, 0, 0});
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g, 1);
    const auto b = balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_median, 20);
    CHECK(b.draws0 == 20);
    CHECK(b.exact0);
    // Median of a 3-subset averaged over all 20 subsets.
    double ref = 0.0;
    std::vector<std::size_t> idx{0, 1, 2};
    do ref += y0[idx[1]];
    while (next_combination(idx, 6));
    CHECK(b.theta0m_bar == doctest::Approx(ref / 20.0).epsilon(1e-15));

    const auto sampled = balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_median, 19, 4);
    CHECK_FALSE(sampled.exact0);
    CHECK(sampled.draws0 == 19);
}

TEST_CASE("balanced sample means match the full means under enumeration") {
    for (auto [a, b] : {std::pair{6, 3}, {3, 6}, {10, 4}}) {
        Rng rng = make_rng(static_cast<std::uint64_t>(a * 100 + b));
        std::vector<double> y0, ym;
        for (int i = 0; i < a; ++i) y0.push_back(standard_normal(rng));
        for (int i = 0; i < b; ++i) ym.push_back(standard_normal(rng));
        const auto ds = groups_of(y0, ym);
        const auto g = group_by_pattern(ds);
        const auto adj = select_adjustment_set(g, 1);
        const auto r = balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_mean, 1000);
        CHECK(r.theta0m_bar == doctest::Approx(mean(y0)).epsilon(1e-13));
        CHECK(r.thetam_bar == doctest::Approx(mean(ym)).epsilon(1e-13));
    }
}

TEST_CASE("balanced averages are invariant to row order within a group") {
    Rng rng = make_rng(31);
    std::vector<double> y0, ym;
    for (int i = 0; i < 8; ++i) y0.push_back(standard_normal(rng));
    for (int i = 0; i < 3; ++i) ym.push_back(standard_normal(rng));
    auto run = [&](const std::vector<double>& a) {
        const auto ds = groups_of(a, ym);
        const auto g = group_by_pattern(ds);
        return balanced_adjustment(ds, g, select_adjustment_set(g, 1), Pattern::all_missing(1), sample_median, 1000)
            .theta0m_bar;
    };
    const double base = run(y0);
    for (int t = 0; t < 5; ++t) {
        auto p = y0;
        std::shuffle(p.begin(), p.end(), rng);
        CHECK(run(p) == doctest::Approx(base).epsilon(1e-14));
    }
}

TEST_CASE("sampled averages are deterministic in the seed") {
    Rng rng = make_rng(8);
    std::vector<double> y0, ym;
    for (int i = 0; i < 60; ++i) y0.push_back(standard_normal(rng));
    for (int i = 0; i < 20; ++i) ym.push_back(standard_normal(rng));
    const auto ds = groups_of(y0, ym);
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g, 1);
    const auto a = balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_median, 100, 5);
    const auto b = balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_median, 100, 5);
    CHECK(a.theta0m_bar == b.theta0m_bar);
    CHECK(combine({1.0, Eigen::VectorXd::Constant(1, a.theta0m_bar), Eigen::VectorXd::Constant(1, a.thetam_bar)},
                  Eigen::VectorXd::Zero(1)) == 1.0);
}

TEST_CASE("balanced_adjustment errors") {
    const auto ds = groups_of({1, 2}, {3});
    const auto g = group_by_pattern(ds);
    const auto adj = select_adjustment_set(g, 1);
    CHECK_THROWS_AS(balanced_adjustment(ds, g, adj, Pattern::complete(1), sample_mean), PatternError);
    CHECK_THROWS_AS(balanced_adjustment(ds, g, adj, Pattern::all_missing(1), sample_mean, 0), Error);
    const SampleEstimator failing = [](const ProjectedSample&) -> double { throw std::runtime_error("boom"); };
    try {
        balanced_adjustment(ds, g, adj, Pattern::all_missing(1), failing);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
}
