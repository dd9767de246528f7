#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "cam/error.hpp"
#include "cam/kde.hpp"
#include "cam/locreg.hpp"
#include "cam/simlab.hpp"
#include "cam/ustat.hpp"

namespace cam {

namespace {

enum Stream : std::uint64_t { kData = 1, kMise = 2, kGeometry = 3, kTest = 4, kTrain = 5 };

// Runs body(rep) for every rep; results must be written by rep index so the
// output does not depend on the thread count.
template <class F>
void for_each_rep(std::size_t reps, unsigned threads, F&& body) {
    if (threads <= 1 || reps <= 1) {
        for (std::size_t r = 0; r < reps; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= reps) return;
            try {
                body(r);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = reps;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::size_t>(threads, reps);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

ModelSpec rep_spec(const ModelSpec& spec, std::size_t rep) {
    ModelSpec s = spec;
    s.seed = derive_seed(spec.seed, {kData, rep});
    return s;
}

double relative_improvement(double cc, double cam) { return cc == 0.0 ? 0.0 : (cc - cam) / cc; }

void finish(ExperimentReport& rep) {
    rep.relative.resize(rep.cc.size());
    for (std::size_t i = 0; i < rep.cc.size(); ++i) rep.relative[i] = relative_improvement(rep.cc[i], rep.cam[i]);
    rep.relative_summary = summarize(rep.relative);
    rep.cc_summary = summarize(rep.cc);
    rep.cam_summary = summarize(rep.cam);
}

}  // namespace

ToyReport run_toy_experiment(const ModelSpec& spec, std::size_t reps, unsigned threads) {
    if (spec.id != ModelId::toy_gaussian) throw Error("toy experiment needs the toy_gaussian model");
    ToyReport out;
    out.cc.resize(reps);
    out.cam.resize(reps);
    const double slope = spec.toy_cov(0, 1) / (2.0 * spec.toy_cov(1, 1));
    for_each_rep(reps, threads, [&](std::size_t r) {
        const auto ds = generate(rep_spec(spec, r));
        CompensatedSum x1, y1, y2;
        for (std::size_t i = 0; i < spec.n; ++i) {
            x1.add(ds.x(i, 0));
            y1.add(ds.y(i));
            y2.add(ds.y(spec.n + i));
        }
        const double n = static_cast<double>(spec.n);
        out.cc[r] = x1.value() / n;
        out.cam[r] = out.cc[r] - slope * (y1.value() / n - y2.value() / n);
    });
    if (reps > 1) {
        out.var_cc = variance(out.cc);
        out.var_cam = variance(out.cam);
    }
    out.closed_form = toy_closed_form(spec.toy_mean, spec.toy_cov, spec.n);
    return out;
}

UStatTarget parse_target(const std::string& name) {
    if (name == "mean") return UStatTarget::mean;
    if (name == "covariance" || name == "cov") return UStatTarget::covariance;
    throw Error("unknown U-statistic target '" + name + "'");
}

PhiChoice parse_phi_choice(const std::string& name) {
    if (name == "practical") return PhiChoice::practical;
    if (name == "linear_fit" || name == "linear") return PhiChoice::linear_fit;
    if (name == "oracle") return PhiChoice::oracle;
    throw Error("unknown adjustment kernel choice '" + name + "'");
}

std::string to_string(UStatTarget t) { return t == UStatTarget::mean ? "mean" : "covariance"; }

std::string to_string(PhiChoice c) {
    switch (c) {
        case PhiChoice::practical:
            return "practical";
        case PhiChoice::linear_fit:
            return "linear_fit";
        case PhiChoice::oracle:
            return "oracle";
    }
    return "unknown";
}

UStatReport run_ustat_experiment(const ModelSpec& spec, const UStatExperimentConfig& cfg, std::size_t reps,
                                 unsigned threads) {
    if (spec.id != ModelId::example_joint) throw Error("U-statistic experiments use the example_joint model");
    UStatReport out;
    // E(X) = Var(X) = Cov(X, Y) = 1 for X ~ Exp(1).
    out.truth = 1.0;
    out.cc.resize(reps);
    out.cam.resize(reps);
    out.cam_se.resize(reps);
    out.cc_se.resize(reps);
    out.covered.resize(reps);
    std::vector<char> cc_covered(reps);
    const double sigma = spec.sigma;

    for_each_rep(reps, threads, [&](std::size_t r) {
        const auto ds = generate(rep_spec(spec, r));
        const auto groups = group_by_pattern(ds);
        const auto adj = select_adjustment_set(groups, cfg.min_count, false);
        const UKernelSpec phi =
            cfg.target == UStatTarget::mean ? mean_kernel(1, 0) : covariance_kernel(1, 0, -1);
        std::vector<UKernelSpec> phims;
        for (const auto& e : adj.entries) {
            const Pattern& m = e.pattern;
            switch (cfg.phim) {
                case PhiChoice::practical:
                    phims.push_back(cfg.target == UStatTarget::mean ? response_identity(m) : response_sqdiff(m));
                    break;
                case PhiChoice::linear_fit:
                    phims.push_back(linear_adjustment(ds, groups, m, phi));
                    break;
                case PhiChoice::oracle: {
                    UKernelSpec k;
                    k.pattern = m;
                    if (cfg.target == UStatTarget::mean) {
                        k.order = 1;
                        k.label = "oracle";
                        k.eval = [sigma](std::span<const Record> z) { return oracle_phi1_example1(z[0].y, sigma); };
                    } else {
                        k.order = 2;
                        k.label = "oracle";
                        k.eval = [sigma](std::span<const Record> z) {
                            return 0.5 * (oracle_phi1_example1(z[0].y, sigma) - oracle_phi1_example1(z[1].y, sigma)) *
                                   (z[0].y - z[1].y);
                        };
                    }
                    phims.push_back(std::move(k));
                    break;
                }
            }
        }
        UStatOptions opt;
        opt.alpha = cfg.alpha;
        opt.budget = cfg.budget;
        opt.seed = derive_seed(spec.seed, {kGeometry, r});
        const auto res = cam_ustat(ds, groups, adj, phi, phims, opt);
        out.cc[r] = res.cc_estimate;
        out.cam[r] = res.estimate;
        out.cam_se[r] = res.se;
        out.cc_se[r] = res.cc_se;
        out.covered[r] = res.ci_lo <= out.truth && out.truth <= res.ci_hi;
        cc_covered[r] = res.cc_ci_lo <= out.truth && out.truth <= res.cc_ci_hi;
    });

    out.cc_summary = summarize(out.cc);
    out.cam_summary = summarize(out.cam);
    if (reps > 1) {
        out.var_cc = variance(out.cc);
        out.var_cam = variance(out.cam);
        out.variance_ratio = out.var_cc > 0.0 ? out.var_cam / out.var_cc : 1.0;
    }
    if (reps > 0) {
        out.coverage = static_cast<double>(std::count(out.covered.begin(), out.covered.end(), 1)) / reps;
        out.cc_coverage = static_cast<double>(std::count(cc_covered.begin(), cc_covered.end(), 1)) / reps;
    }
    return out;
}

ExperimentReport run_density_experiment(const ModelSpec& spec, const DensityExperimentConfig& cfg, std::size_t reps,
                                        unsigned threads) {
    if (!is_density_model(spec.id)) throw Error("density experiments need a density model");
    ExperimentReport out;
    out.metric = "tv";
    out.cc.resize(reps);
    out.cam.resize(reps);
    out.bandwidth.resize(reps);
    for_each_rep(reps, threads, [&](std::size_t r) {
        const auto ds = generate(rep_spec(spec, r));
        const auto groups = group_by_pattern(ds);
        const auto adj = select_adjustment_set(groups, cfg.min_count, false);
        const double h = cfg.h > 0.0 ? cfg.h : rule_of_thumb_bandwidth(ds, groups);
        const CamDensityModel model(ds, groups, adj, {cfg.family, h, ds.d()});
        const auto axes = bounding_grid(ds, 3.0 * h, cfg.grid_points);
        std::vector<double> f_cc, f_cam;
        model.grid(axes, f_cc, f_cam);
        std::vector<double> truth(f_cc.size());
        double cell = 1.0;
        for (const auto& ax : axes) cell *= ax[1] - ax[0];
        std::vector<double> pt(axes.size());
        std::vector<std::size_t> idx(axes.size(), 0);
        for (std::size_t flat = 0; flat < truth.size(); ++flat) {
            for (std::size_t j = 0; j < axes.size(); ++j) pt[j] = axes[j][idx[j]];
            truth[flat] = true_density(spec.id, pt);
            for (std::size_t j = axes.size(); j-- > 0;) {
                if (++idx[j] < axes[j].size()) break;
                idx[j] = 0;
            }
        }
        out.cc[r] = tv_distance(f_cc, truth, cell);
        out.cam[r] = tv_distance(f_cam, truth, cell);
        out.bandwidth[r] = h;
    });
    finish(out);
    return out;
}

ExperimentReport run_regression_experiment(const ModelSpec& spec, const RegressionExperimentConfig& cfg,
                                           std::size_t reps, unsigned threads) {
    if (!is_regression_model(spec.id)) throw Error("regression experiments need a regression model");
    if (cfg.n_mc == 0) throw Error("n_mc must be positive");
    ExperimentReport out;
    out.metric = "mise";
    out.cc.resize(reps);
    out.cam.resize(reps);
    out.bandwidth.resize(reps);
    for_each_rep(reps, threads, [&](std::size_t r) {
        const auto ds = generate(rep_spec(spec, r));
        const auto groups = group_by_pattern(ds);
        const auto adj = select_adjustment_set(groups, cfg.min_count, false);
        const double h = cfg.h > 0.0 ? cfg.h
                                     : loocv_bandwidth(ds, groups, default_bandwidth_grid(ds, groups), cfg.family).h;
        const CamRegressionModel model(ds, groups, adj, {cfg.family, h, ds.d()});
        Rng rng = make_rng(spec.seed, {kMise, r});
        std::vector<double> x;
        CompensatedSum cc, cam;
        std::size_t used = 0, skipped = 0;
        for (std::size_t b = 0; b < cfg.n_mc; ++b) {
            draw_features(spec.id, rng, x);
            const double eta = true_regression(spec.id, x);
            try {
                const auto fit = model.at(x);
                cc.add((fit.eta_cc - eta) * (fit.eta_cc - eta));
                cam.add((fit.eta_cam - eta) * (fit.eta_cam - eta));
                ++used;
            } catch (const NoLocalData&) {
                ++skipped;
            }
        }
        if (skipped * 10 > cfg.n_mc)
            throw NoLocalData("regression experiment rep " + std::to_string(r) + ": " + std::to_string(skipped) +
                              " of " + std::to_string(cfg.n_mc) + " evaluations failed");
        out.cc[r] = cc.value() / static_cast<double>(used);
        out.cam[r] = cam.value() / static_cast<double>(used);
        out.bandwidth[r] = h;
    });
    finish(out);
    return out;
}

HoldoutReport run_holdout(const MaskedDataset& ds, const HoldoutConfig& cfg, std::size_t reps, unsigned threads) {
    const auto groups = group_by_pattern(ds);
    const auto& a0 = groups.complete();
    if (a0.size() < cfg.test_size + cfg.train_complete)
        throw InsufficientData("holdout needs " + std::to_string(cfg.test_size + cfg.train_complete) +
                               " complete cases, found " + std::to_string(a0.size()));
    std::vector<std::size_t> perm(a0.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> pick;
    Rng trng = make_rng(cfg.seed, {kTest});
    draw_subset(trng, perm, cfg.test_size, pick);
    std::vector<std::size_t> test, pool;
    {
        std::vector<char> in_test(a0.size(), 0);
        for (auto p : pick) in_test[p] = 1;
        for (std::size_t i = 0; i < a0.size(); ++i) (in_test[i] ? test : pool).push_back(a0[i]);
    }
    std::vector<std::size_t> incomplete;
    for (const auto& [m, rows] : groups.groups)
        if (!m.is_complete()) incomplete.insert(incomplete.end(), rows.begin(), rows.end());

    HoldoutReport out;
    out.mse_cc.resize(reps);
    out.mse_cam.resize(reps);
    out.bandwidth.resize(reps);
    for_each_rep(reps, threads, [&](std::size_t r) {
        Rng rng = make_rng(cfg.seed, {kTrain, r});
        std::vector<std::size_t> p(pool.size());
        std::iota(p.begin(), p.end(), std::size_t{0});
        std::vector<std::size_t> chosen;
        draw_subset(rng, p, cfg.train_complete, chosen);
        std::vector<std::size_t> rows;
        for (auto c : chosen) rows.push_back(pool[c]);
        rows.insert(rows.end(), incomplete.begin(), incomplete.end());
        std::sort(rows.begin(), rows.end());
        const auto train = select_rows(ds, rows);
        const auto tg = group_by_pattern(train);
        const auto adj = select_adjustment_set(tg, cfg.min_count, false);
        const double h = loocv_bandwidth(train, tg, default_bandwidth_grid(train, tg), cfg.family).h;
        const CamRegressionModel model(train, tg, adj, {cfg.family, h, train.d()});
        CompensatedSum cc, cam;
        std::size_t used = 0;
        for (auto t : test) {
            try {
                const auto fit = model.at(ds.row(t));
                cc.add((fit.eta_cc - ds.y(t)) * (fit.eta_cc - ds.y(t)));
                cam.add((fit.eta_cam - ds.y(t)) * (fit.eta_cam - ds.y(t)));
                ++used;
            } catch (const NoLocalData&) {
            }
        }
        if (used == 0) throw NoLocalData("holdout rep " + std::to_string(r) + ": no test point could be fitted");
        out.mse_cc[r] = cc.value() / static_cast<double>(used);
        out.mse_cam[r] = cam.value() / static_cast<double>(used);
        out.bandwidth[r] = h;
    });
    std::size_t better = 0;
    for (std::size_t r = 0; r < reps; ++r) better += out.mse_cam[r] < out.mse_cc[r];
    out.cam_better_fraction = reps ? static_cast<double>(better) / static_cast<double>(reps) : 0.0;
    out.cc_summary = summarize(out.mse_cc);
    out.cam_summary = summarize(out.mse_cam);
    return out;
}

}  // namespace cam
