#include "cam/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cam/dataset.hpp"
#include "cam/json_io.hpp"
#include "cam/kde.hpp"
#include "cam/locreg.hpp"
#include "cam/simlab.hpp"
#include "cam/ustat.hpp"

namespace cam {

namespace {

struct RunConfig {
    std::string input;
    std::string response;
    std::vector<std::string> features;
    std::vector<std::string> na{"NA", ""};
    std::size_t min_count = 20;
    bool integrate = false;
    std::string family = "gaussian";
    double h = 0.0;
    std::string h_rule;
    double alpha = 0.05;
    std::uint64_t budget = 100000;
    std::uint64_t seed = 0;
    std::string out;
    std::string emit_csv;
    unsigned threads = 1;
    std::string feature;
    std::string feature2;
    std::string phim;
    std::vector<std::string> query;
    std::string query_file;
    std::size_t grid_points = 200;
    std::string model;
    std::size_t n = 1000;
    double p1 = 0.5;
    std::size_t reps = 100;
    std::string target = "mean";
    std::size_t n_mc = 10000;
};

class UsageError : public Error {
public:
    using Error::Error;
};

MaskedDataset load(const RunConfig& cfg, bool need_response) {
    if (need_response && cfg.response.empty()) throw UsageError("--response is required for this command");
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw DataError("cannot open input file '" + cfg.input + "'");
    CsvSchema schema;
    schema.features = cfg.features;
    schema.response = cfg.response;
    schema.na_markers = cfg.na;
    return ingest_csv(in, schema);
}

// Accepts a 1-based index or a feature name; "y" or the response name maps to -1.
int resolve_feature(const MaskedDataset& ds, const std::string& token, bool allow_response) {
    if (allow_response && (token == "y" || token == ds.response_name())) return -1;
    const auto& names = ds.feature_names();
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == token) return static_cast<int>(j);
    try {
        std::size_t pos = 0;
        const long v = std::stol(token, &pos);
        if (pos == token.size() && v >= 1 && v <= ds.d()) return static_cast<int>(v - 1);
    } catch (const std::exception&) {
    }
    throw UsageError("unknown feature '" + token + "'");
}

std::vector<double> parse_point(const std::string& s, int d) {
    std::vector<double> x;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t pos = 0;
            x.push_back(std::stod(cell, &pos));
            if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw UsageError("query point '" + s + "' is not a comma-separated list of numbers");
        }
    }
    if (x.size() != static_cast<std::size_t>(d))
        throw UsageError("query point '" + s + "' has " + std::to_string(x.size()) + " coordinates, expected " +
                         std::to_string(d));
    return x;
}

std::vector<std::vector<double>> query_points(const RunConfig& cfg, const MaskedDataset& ds) {
    std::vector<std::vector<double>> pts;
    for (const auto& q : cfg.query) pts.push_back(parse_point(q, ds.d()));
    if (!cfg.query_file.empty()) {
        std::ifstream in(cfg.query_file, std::ios::binary);
        if (!in) throw DataError("cannot open query file '" + cfg.query_file + "'");
        CsvSchema schema;
        schema.features = ds.feature_names();
        const auto q = ingest_csv(in, schema);
        for (std::size_t i = 0; i < q.n(); ++i) {
            if (!q.pattern(i).is_complete())
                throw DataError("query file row " + std::to_string(i + 1) + " has a missing coordinate");
            auto r = q.row(i);
            pts.emplace_back(r.begin(), r.end());
        }
    }
    return pts;
}

Json header(const std::string& command, const RunConfig& cfg) {
    return Json{{"schema", kJsonSchema}, {"command", command}, {"seed", cfg.seed}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f << text;
}

void emit(const RunConfig& cfg, const Json& j, std::ostream& out) {
    if (cfg.out.empty())
        out << dump(j);
    else
        write_text(cfg.out, dump(j));
}

Json group_counts(const PatternGroups& g) {
    Json j = Json::array();
    for (const auto& [m, rows] : g.groups) j.push_back({{"pattern", m.to_string()}, {"n", rows.size()}});
    return j;
}

double choose_bandwidth(const RunConfig& cfg, const MaskedDataset& ds, const PatternGroups& g, bool regression,
                        Json& info) {
    if (cfg.h > 0.0 && !cfg.h_rule.empty()) throw UsageError("--h and --h-rule are mutually exclusive");
    if (cfg.h > 0.0) {
        info["h_rule"] = "fixed";
        return cfg.h;
    }
    const std::string rule = cfg.h_rule.empty() ? (regression ? "loocv" : "rot") : cfg.h_rule;
    info["h_rule"] = rule;
    if (rule == "rot") return rule_of_thumb_bandwidth(ds, g);
    if (rule == "loocv") {
        if (!regression) throw UsageError("--h-rule loocv applies to regress only");
        return loocv_bandwidth(ds, g, default_bandwidth_grid(ds, g), parse_family(cfg.family)).h;
    }
    throw UsageError("unknown bandwidth rule '" + rule + "' (expected rot or loocv)");
}

int cmd_estimate(const RunConfig& cfg, bool covariance, std::ostream& out) {
    const auto ds = load(cfg, true);
    const auto groups = group_by_pattern(ds);
    const auto adj = select_adjustment_set(groups, cfg.min_count, cfg.integrate);
    if (cfg.feature.empty()) throw UsageError("--feature is required");
    UKernelSpec phi;
    if (covariance) {
        if (cfg.feature2.empty()) throw UsageError("--feature2 is required for estimate-cov");
        phi = covariance_kernel(ds.d(), resolve_feature(ds, cfg.feature, false), resolve_feature(ds, cfg.feature2, true));
    } else {
        phi = mean_kernel(ds.d(), resolve_feature(ds, cfg.feature, false));
    }
    const std::string choice = cfg.phim.empty() ? "linear" : cfg.phim;
    Warnings warnings;
    std::vector<UKernelSpec> phims;
    for (const auto& e : adj.entries) {
        if (choice == "linear")
            phims.push_back(linear_adjustment(ds, groups, e.pattern, phi, &warnings));
        else if (choice == "response")
            phims.push_back(covariance ? response_sqdiff(e.pattern) : response_identity(e.pattern));
        else
            throw UsageError("unknown --phim '" + choice + "' (expected linear or response)");
    }
    UStatOptions opt;
    opt.alpha = cfg.alpha;
    opt.budget = cfg.budget;
    opt.seed = cfg.seed;
    auto res = cam_ustat(ds, groups, adj, phi, phims, opt);
    res.warnings.insert(res.warnings.begin(), warnings.begin(), warnings.end());
    Json j = header(covariance ? "estimate-cov" : "estimate-mean", cfg);
    j["target"] = phi.label;
    j["phim"] = choice;
    j.update(to_json(res));
    if (!cfg.emit_csv.empty()) {
        std::string csv = "pattern,n,theta0m,thetam,gamma\n";
        for (std::size_t k = 0; k < adj.size(); ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            csv += adj.entries[k].pattern.to_string() + "," + std::to_string(res.group_sizes[k]) + "," +
                   format_double(res.components.theta0M[ki]) + "," + format_double(res.components.thetaM[ki]) + "," +
                   format_double(res.gamma[ki]) + "\n";
        }
        write_text(cfg.emit_csv, csv);
    }
    emit(cfg, j, out);
    return 0;
}

int cmd_density(const RunConfig& cfg, std::ostream& out) {
    const auto ds = load(cfg, false);
    const auto groups = group_by_pattern(ds);
    const auto adj = select_adjustment_set(groups, cfg.min_count, cfg.integrate);
    Json j = header("density", cfg);
    const double h = choose_bandwidth(cfg, ds, groups, false, j);
    const SmootherSpec spec{parse_family(cfg.family), h, ds.d()};
    const CamDensityModel model(ds, groups, adj, spec);
    j["family"] = cfg.family;
    j["h"] = h;
    j["n0"] = groups.n0();
    j["groups"] = group_counts(groups);
    j["warnings"] = model.warnings();

    const auto pts = query_points(cfg, ds);
    if (!pts.empty()) {
        Json results = Json::array();
        std::string csv;
        for (int k = 0; k < ds.d(); ++k) csv += ds.feature_names()[static_cast<std::size_t>(k)] + ",";
        csv += "f_cc,f_cam";
        for (const auto& e : adj.entries) csv += ",gamma_" + e.pattern.to_string();
        csv += "\n";
        for (const auto& x : pts) {
            const auto r = model.at(x);
            Json q = to_json(r);
            q["x"] = x;
            results.push_back(std::move(q));
            for (double v : x) csv += format_double(v) + ",";
            csv += format_double(r.f_cc) + "," + format_double(r.f_cam);
            for (const auto& t : r.terms) csv += "," + format_double(t.gamma);
            csv += "\n";
        }
        j["queries"] = results;
        if (!cfg.emit_csv.empty()) write_text(cfg.emit_csv, csv);
    } else {
        if (ds.d() > 2) throw UsageError("grid output supports d <= 2; pass --query points instead");
        const auto axes = bounding_grid(ds, 3.0 * h, cfg.grid_points);
        std::vector<double> f_cc, f_cam;
        model.grid(axes, f_cc, f_cam);
        Json grid;
        grid["points_per_axis"] = cfg.grid_points;
        Json lo = Json::array(), hi = Json::array();
        double cell = 1.0;
        for (const auto& ax : axes) {
            lo.push_back(ax.front());
            hi.push_back(ax.back());
            cell *= ax[1] - ax[0];
        }
        grid["lower"] = lo;
        grid["upper"] = hi;
        double mass_cc = 0.0, mass_cam = 0.0, min_cam = f_cam.empty() ? 0.0 : f_cam.front();
        for (std::size_t i = 0; i < f_cc.size(); ++i) {
            mass_cc += f_cc[i] * cell;
            mass_cam += f_cam[i] * cell;
            min_cam = std::min(min_cam, f_cam[i]);
        }
        grid["mass_cc"] = mass_cc;
        grid["mass_cam"] = mass_cam;
        grid["min_f_cam"] = min_cam;
        j["grid"] = grid;
        if (!cfg.emit_csv.empty()) {
            std::string csv;
            for (int k = 0; k < ds.d(); ++k) csv += ds.feature_names()[static_cast<std::size_t>(k)] + ",";
            csv += "f_cc,f_cam\n";
            std::vector<std::size_t> idx(axes.size(), 0);
            for (std::size_t flat = 0; flat < f_cc.size(); ++flat) {
                for (std::size_t a = 0; a < axes.size(); ++a) csv += format_double(axes[a][idx[a]]) + ",";
                csv += format_double(f_cc[flat]) + "," + format_double(f_cam[flat]) + "\n";
                for (std::size_t a = axes.size(); a-- > 0;) {
                    if (++idx[a] < axes[a].size()) break;
                    idx[a] = 0;
                }
            }
            write_text(cfg.emit_csv, csv);
        }
    }
    emit(cfg, j, out);
    return 0;
}

int cmd_regress(const RunConfig& cfg, std::ostream& out) {
    const auto ds = load(cfg, true);
    const auto groups = group_by_pattern(ds);
    const auto adj = select_adjustment_set(groups, cfg.min_count, cfg.integrate);
    Json j = header("regress", cfg);
    const double h = choose_bandwidth(cfg, ds, groups, true, j);
    const CamRegressionModel model(ds, groups, adj, {parse_family(cfg.family), h, ds.d()});
    j["family"] = cfg.family;
    j["h"] = h;
    j["n0"] = groups.n0();
    j["groups"] = group_counts(groups);
    const auto pts = query_points(cfg, ds);
    if (pts.empty()) throw UsageError("regress needs at least one --query point or --query-file");
    Json results = Json::array();
    std::string csv;
    for (int k = 0; k < ds.d(); ++k) csv += ds.feature_names()[static_cast<std::size_t>(k)] + ",";
    csv += "eta_cc,eta_cam";
    for (const auto& e : adj.entries) csv += ",gamma_" + e.pattern.to_string();
    csv += "\n";
    for (const auto& x : pts) {
        const auto r = model.at(x);
        Json q = to_json(r);
        q["x"] = x;
        results.push_back(std::move(q));
        for (double v : x) csv += format_double(v) + ",";
        csv += format_double(r.eta_cc) + "," + format_double(r.eta_cam);
        for (const auto& t : r.terms) csv += "," + format_double(t.gamma);
        csv += "\n";
    }
    j["queries"] = results;
    if (!cfg.emit_csv.empty()) write_text(cfg.emit_csv, csv);
    emit(cfg, j, out);
    return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    if (cfg.model.empty()) throw UsageError("--model is required");
    const ModelId id = parse_model(cfg.model);
    const ModelSpec spec = first_component_mcar(id, cfg.n, cfg.p1, cfg.seed);
    Json j = header("simulate", cfg);
    j["model"] = to_string(id);
    j["n"] = cfg.n;
    j["p1"] = cfg.p1;
    std::string csv;
    if (id == ModelId::toy_gaussian) {
        const auto rep = run_toy_experiment(spec, cfg.reps, cfg.threads);
        j.update(to_json(rep));
        csv = "rep,cc,cam\n";
        for (std::size_t r = 0; r < rep.cc.size(); ++r)
            csv += std::to_string(r) + "," + format_double(rep.cc[r]) + "," + format_double(rep.cam[r]) + "\n";
    } else if (id == ModelId::example_joint) {
        UStatExperimentConfig ucfg;
        ucfg.target = cfg.model == "example2" ? UStatTarget::covariance : parse_target(cfg.target);
        ucfg.phim = parse_phi_choice(cfg.phim.empty() ? "practical" : cfg.phim);
        ucfg.alpha = cfg.alpha;
        ucfg.budget = cfg.budget;
        ucfg.min_count = cfg.min_count;
        const auto rep = run_ustat_experiment(spec, ucfg, cfg.reps, cfg.threads);
        j["target"] = to_string(ucfg.target);
        j["phim"] = to_string(ucfg.phim);
        j["budget"] = cfg.budget;
        j["closed_form_ratio"] = ucfg.target == UStatTarget::mean ? Json(example1_variance_ratio(cfg.p1, spec.sigma))
                                                                   : Json(nullptr);
        j.update(to_json(rep));
        csv = "rep,cc,cam,cc_se,cam_se,covered\n";
        for (std::size_t r = 0; r < rep.cc.size(); ++r)
            csv += std::to_string(r) + "," + format_double(rep.cc[r]) + "," + format_double(rep.cam[r]) + "," +
                   format_double(rep.cc_se[r]) + "," + format_double(rep.cam_se[r]) + "," +
                   std::to_string(static_cast<int>(rep.covered[r])) + "\n";
    } else {
        ExperimentReport rep;
        if (is_density_model(id)) {
            DensityExperimentConfig dcfg;
            dcfg.family = parse_family(cfg.family);
            dcfg.h = cfg.h;
            dcfg.grid_points = cfg.grid_points;
            dcfg.min_count = cfg.min_count;
            rep = run_density_experiment(spec, dcfg, cfg.reps, cfg.threads);
        } else {
            RegressionExperimentConfig rcfg;
            rcfg.family = parse_family(cfg.family);
            rcfg.h = cfg.h;
            rcfg.n_mc = cfg.n_mc;
            rcfg.min_count = cfg.min_count;
            rep = run_regression_experiment(spec, rcfg, cfg.reps, cfg.threads);
        }
        j.update(to_json(rep));
        csv = "rep,h," + rep.metric + "_cc," + rep.metric + "_cam,relative\n";
        for (std::size_t r = 0; r < rep.cc.size(); ++r)
            csv += std::to_string(r) + "," + format_double(rep.bandwidth[r]) + "," + format_double(rep.cc[r]) + "," +
                   format_double(rep.cam[r]) + "," + format_double(rep.relative[r]) + "\n";
    }
    if (!cfg.emit_csv.empty()) write_text(cfg.emit_csv, csv);
    emit(cfg, j, out);
    return 0;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--seed", cfg.seed, "RNG seed")->envname("CAM_SEED");
    sub->add_option("--out", cfg.out, "Write the JSON summary here instead of stdout");
    sub->add_option("--emit-csv", cfg.emit_csv, "Write plot-ready CSV here");
    sub->add_option("--min-count", cfg.min_count, "Smallest pattern group kept in the adjustment set")
        ->envname("CAM_MIN_COUNT");
}

void add_data(CLI::App* sub, RunConfig& cfg, bool response_required) {
    sub->add_option("--input", cfg.input, "CSV file with a header row")->required();
    auto* r = sub->add_option("--response", cfg.response, "Response column name");
    if (response_required) r->required();
    sub->add_option("--features", cfg.features, "Feature columns (default: every other column)")->delimiter(',');
    sub->add_option("--na", cfg.na, "Missing-value markers (repeatable)")->envname("CAM_NA");
    sub->add_flag("--integrate", cfg.integrate, "Pool nested patterns into each adjustment group");
}

void add_smoother(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--family", cfg.family, "Kernel family: gaussian or box")->envname("CAM_FAMILY");
    sub->add_option("--h", cfg.h, "Bandwidth")->check(CLI::PositiveNumber);
    sub->add_option("--h-rule", cfg.h_rule, "Bandwidth rule: rot or loocv");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Correlation-assisted missing-data estimators", "cam"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", "0.1.0");

    auto* mean = app.add_subcommand("estimate-mean", "CAM estimate of a feature mean");
    auto* cov = app.add_subcommand("estimate-cov", "CAM estimate of a covariance");
    for (auto* sub : {mean, cov}) {
        add_data(sub, cfg, true);
        add_common(sub, cfg);
        sub->add_option("--feature", cfg.feature, "Target feature (name or 1-based index)")->required();
        sub->add_option("--phim", cfg.phim, "Adjustment kernel: linear or response");
        sub->add_option("--alpha", cfg.alpha, "Interval level")->envname("CAM_ALPHA");
        sub->add_option("--budget", cfg.budget, "Subsets per geometry entry")->envname("CAM_BUDGET");
    }
    cov->add_option("--feature2", cfg.feature2, "Second coordinate (feature or y)")->required();

    auto* dens = app.add_subcommand("density", "CAM kernel density estimate");
    add_data(dens, cfg, false);
    add_common(dens, cfg);
    add_smoother(dens, cfg);
    dens->add_option("--query,--at", cfg.query, "Query point x1,x2,... (repeatable)");
    dens->add_option("--query-file", cfg.query_file, "CSV of query points with feature columns");
    dens->add_option("--grid-points", cfg.grid_points, "Grid points per axis");

    auto* reg = app.add_subcommand("regress", "CAM local-constant regression");
    add_data(reg, cfg, true);
    add_common(reg, cfg);
    add_smoother(reg, cfg);
    reg->add_option("--query,--at", cfg.query, "Query point x1,x2,... (repeatable)");
    reg->add_option("--query-file", cfg.query_file, "CSV of query points with feature columns");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment on a synthetic model");
    add_common(sim, cfg);
    sim->add_option("--model", cfg.model, "Model id")->required();
    sim->add_option("--n", cfg.n, "Sample size");
    sim->add_option("--p1", cfg.p1, "Probability that feature 1 is missing")->check(CLI::Range(0.0, 1.0));
    sim->add_option("--reps", cfg.reps, "Replications");
    sim->add_option("--threads", cfg.threads, "Worker threads")->envname("CAM_THREADS");
    sim->add_option("--target", cfg.target, "U-statistic target: mean or covariance");
    sim->add_option("--phim", cfg.phim, "Adjustment kernel: practical, linear_fit or oracle");
    sim->add_option("--alpha", cfg.alpha, "Interval level")->envname("CAM_ALPHA");
    sim->add_option("--budget", cfg.budget, "Subsets per geometry entry")->envname("CAM_BUDGET");
    sim->add_option("--family", cfg.family, "Kernel family: gaussian or box")->envname("CAM_FAMILY");
    sim->add_option("--h", cfg.h, "Fixed bandwidth (default: per-rep rule)");
    sim->add_option("--grid-points", cfg.grid_points, "Grid points per axis for TV");
    sim->add_option("--n-mc", cfg.n_mc, "Monte Carlo draws for MISE");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*mean) return cmd_estimate(cfg, false, out);
        if (*cov) return cmd_estimate(cfg, true, out);
        if (*dens) return cmd_density(cfg, out);
        if (*reg) return cmd_regress(cfg, out);
        if (*sim) return cmd_simulate(cfg, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace cam
