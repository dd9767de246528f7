#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cam/cam_core.hpp"
#include "cam/cli.hpp"
#include "cam/json_io.hpp"
#include "cam/kde.hpp"
#include "cam/locreg.hpp"
#include "cam/simlab.hpp"
#include "cam/ustat.hpp"

namespace py = pybind11;
using namespace cam;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MaskedDataset to_dataset(const Array& x, const Array& y) {
    if (x.ndim() != 2) throw py::value_error("x must be a 2-d array");
    if (y.ndim() != 1 || y.shape(0) != x.shape(0)) throw py::value_error("y must be 1-d with one entry per row of x");
    const auto n = static_cast<std::size_t>(x.shape(0));
    const int d = static_cast<int>(x.shape(1));
    std::vector<double> xs(x.data(), x.data() + n * static_cast<std::size_t>(d));
    std::vector<double> ys(y.data(), y.data() + n);
    return MaskedDataset(d, std::move(xs), std::move(ys));
}

MaskedDataset to_dataset(const Array& x) {
    const auto n = x.ndim() == 2 ? static_cast<std::size_t>(x.shape(0)) : 0;
    return to_dataset(x, Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(n)}, std::vector<double>(n).data()));
}

std::vector<std::vector<double>> to_points(const Array& points, int d) {
    if (points.ndim() != 2 || points.shape(1) != d) throw py::value_error("points must have shape (k, d)");
    std::vector<std::vector<double>> out;
    for (py::ssize_t i = 0; i < points.shape(0); ++i) out.emplace_back(points.data(i, 0), points.data(i, 0) + d);
    return out;
}

std::string estimate(const Array& x, const Array& y, int feature_a, int feature_b, bool covariance,
                     const std::string& phim, double alpha, std::uint64_t budget, std::uint64_t seed,
                     std::size_t min_count, bool integrate) {
    const auto ds = to_dataset(x, y);
    const auto groups = group_by_pattern(ds);
    const auto adj = select_adjustment_set(groups, min_count, integrate);
    const auto phi = covariance ? covariance_kernel(ds.d(), feature_a, feature_b) : mean_kernel(ds.d(), feature_a);
    Warnings warnings;
    std::vector<UKernelSpec> phims;
    for (const auto& e : adj.entries) {
        if (phim == "linear")
            phims.push_back(linear_adjustment(ds, groups, e.pattern, phi, &warnings));
        else if (phim == "response")
            phims.push_back(covariance ? response_sqdiff(e.pattern) : response_identity(e.pattern));
        else
            throw py::value_error("phim must be 'linear' or 'response'");
    }
    UStatOptions opt;
    opt.alpha = alpha;
    opt.budget = budget;
    opt.seed = seed;
    auto res = cam_ustat(ds, groups, adj, phi, phims, opt);
    res.warnings.insert(res.warnings.begin(), warnings.begin(), warnings.end());
    return dump(to_json(res));
}

std::string density(const Array& x, const Array& points, double h, const std::string& family,
                    std::size_t min_count, bool integrate) {
    const auto ds = to_dataset(x);
    const auto groups = group_by_pattern(ds);
    const auto adj = select_adjustment_set(groups, min_count, integrate);
    const SmootherSpec spec{parse_family(family), h > 0.0 ? h : rule_of_thumb_bandwidth(ds, groups), ds.d()};
    const CamDensityModel model(ds, groups, adj, spec);
    Json queries = Json::array();
    for (const auto& p : to_points(points, ds.d())) queries.push_back(to_json(model.at(p)));
    return dump(Json{{"h", spec.h}, {"family", family}, {"queries", queries}});
}

std::string regress(const Array& x, const Array& y, const Array& points, double h, const std::string& family,
                    std::size_t min_count, bool integrate) {
    const auto ds = to_dataset(x, y);
    const auto groups = group_by_pattern(ds);
    const auto adj = select_adjustment_set(groups, min_count, integrate);
    const auto fam = parse_family(family);
    if (!(h > 0.0)) h = loocv_bandwidth(ds, groups, default_bandwidth_grid(ds, groups), fam).h;
    const CamRegressionModel model(ds, groups, adj, {fam, h, ds.d()});
    Json queries = Json::array();
    for (const auto& p : to_points(points, ds.d())) queries.push_back(to_json(model.at(p)));
    return dump(Json{{"h", h}, {"family", family}, {"queries", queries}});
}

py::tuple generate_model(const std::string& model, std::size_t n, double p1, std::uint64_t seed) {
    const auto ds = generate(first_component_mcar(parse_model(model), n, p1, seed));
    Array x({static_cast<py::ssize_t>(ds.n()), static_cast<py::ssize_t>(ds.d())});
    Array y(static_cast<py::ssize_t>(ds.n()));
    auto xm = x.mutable_unchecked<2>();
    auto ym = y.mutable_unchecked<1>();
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.d(); ++j) xm(i, j) = ds.x(i, j);
        ym(i) = ds.y(i);
    }
    return py::make_tuple(x, y);
}

py::tuple cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"cam"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_camest, m) {
    m.doc() = "Complete-case adjustment estimators";

    py::register_exception<Error>(m, "CamError", PyExc_ValueError);

    m.def("combine",
          [](double theta0, const Eigen::VectorXd& theta0m, const Eigen::VectorXd& thetam, const Eigen::VectorXd& gamma) {
              return combine({theta0, theta0m, thetam}, gamma);
          },
          py::arg("theta0"), py::arg("theta0m"), py::arg("thetam"), py::arg("gamma"));
    m.def("optimal_gamma",
          [](const Eigen::VectorXd& omega, const Eigen::MatrixXd& lambda) {
              MseGeometry g;
              g.omega = omega;
              g.lambda = lambda;
              const auto r = optimal_gamma(g);
              return py::make_tuple(r.gamma, r.reduction, r.rank);
          },
          py::arg("omega"), py::arg("lambda_"));
    m.def("estimate_json", &estimate, py::arg("x"), py::arg("y"), py::arg("feature_a"), py::arg("feature_b"),
          py::arg("covariance"), py::arg("phim"), py::arg("alpha"), py::arg("budget"), py::arg("seed"),
          py::arg("min_count"), py::arg("integrate"));
    m.def("density_json", &density, py::arg("x"), py::arg("points"), py::arg("h"), py::arg("family"),
          py::arg("min_count"), py::arg("integrate"));
    m.def("regress_json", &regress, py::arg("x"), py::arg("y"), py::arg("points"), py::arg("h"), py::arg("family"),
          py::arg("min_count"), py::arg("integrate"));
    m.def("generate", &generate_model, py::arg("model"), py::arg("n"), py::arg("p1"), py::arg("seed"));
    m.def("run_cli", &cli, py::arg("args"));
}
