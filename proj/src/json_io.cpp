#include "cam/json_io.hpp"

#include <cstdio>

namespace cam {

Json to_json(const Eigen::VectorXd& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

Json to_json(const Eigen::MatrixXd& m) {
    Json j = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(std::move(row));
    }
    return j;
}

Json to_json(const Summary& s) {
    return Json{{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"se_mean", s.se_mean}};
}

Json to_json(const CamUStatResult& r) {
    Json patterns = Json::array();
    for (std::size_t k = 0; k < r.geometry.patterns.size(); ++k)
        patterns.push_back({{"pattern", r.geometry.patterns[k].to_string()},
                            {"n", r.group_sizes[k]},
                            {"theta0m", r.components.theta0M[static_cast<Eigen::Index>(k)]},
                            {"thetam", r.components.thetaM[static_cast<Eigen::Index>(k)]}});
    return Json{{"estimate", r.estimate},
                {"se", r.se},
                {"ci", {r.ci_lo, r.ci_hi}},
                {"alpha", r.alpha},
                {"gamma", to_json(r.gamma)},
                {"psi", r.geometry.psi},
                {"omega", to_json(r.geometry.omega)},
                {"lambda", to_json(r.geometry.lambda)},
                {"budget", r.geometry.budget},
                {"geometry_exact", r.geometry.exact},
                {"n0", r.n0},
                {"patterns", patterns},
                {"cc", {{"estimate", r.cc_estimate}, {"se", r.cc_se}, {"ci", {r.cc_ci_lo, r.cc_ci_hi}}}},
                {"warnings", r.warnings}};
}

Json to_json(const CamDensityResult& r) {
    Json terms = Json::array();
    for (const auto& t : r.terms)
        terms.push_back(
            {{"pattern", t.pattern.to_string()}, {"n", t.n_m}, {"f0m", t.f0m}, {"fm", t.fm}, {"gamma", t.gamma}});
    return Json{{"f_cc", r.f_cc}, {"f_cam", r.f_cam}, {"patterns", terms}, {"warnings", r.warnings}};
}

Json to_json(const CamRegressionResult& r) {
    Json terms = Json::array();
    for (const auto& t : r.terms) {
        Json e{{"pattern", t.pattern.to_string()}, {"n", t.n_m}, {"excluded", t.excluded}};
        if (!t.excluded) {
            e["eta0m"] = t.eta0m;
            e["etam"] = t.etam;
            e["sigma2_m"] = t.sigma2_m;
            e["gamma"] = t.gamma;
        }
        terms.push_back(std::move(e));
    }
    return Json{{"eta_cc", r.eta_cc},
                {"eta_cam", r.eta_cam},
                {"sigma2", r.sigma2_hat},
                {"patterns", terms},
                {"warnings", r.warnings}};
}

Json to_json(const BalancedAdjustment& b) {
    return Json{{"theta0m_bar", b.theta0m_bar}, {"thetam_bar", b.thetam_bar}, {"subsample_size", b.subsample_size},
                {"draws0", b.draws0},           {"drawsm", b.drawsm},         {"exact0", b.exact0},
                {"exactm", b.exactm}};
}

Json to_json(const ToyReport& r) {
    return Json{{"reps", r.cc.size()},
                {"var_cc", r.var_cc},
                {"var_cam", r.var_cam},
                {"closed_form", {{"var_cc", r.closed_form.var_cc}, {"var_cam", r.closed_form.var_cam}}}};
}

Json to_json(const UStatReport& r) {
    return Json{{"reps", r.cc.size()},
                {"truth", r.truth},
                {"cc", to_json(r.cc_summary)},
                {"cam", to_json(r.cam_summary)},
                {"var_cc", r.var_cc},
                {"var_cam", r.var_cam},
                {"variance_ratio", r.variance_ratio},
                {"coverage", r.coverage},
                {"cc_coverage", r.cc_coverage}};
}

Json to_json(const ExperimentReport& r) {
    return Json{{"reps", r.cc.size()},
                {"metric", r.metric},
                {"relative", to_json(r.relative_summary)},
                {"cc", to_json(r.cc_summary)},
                {"cam", to_json(r.cam_summary)}};
}

Json to_json(const HoldoutReport& r) {
    return Json{{"reps", r.mse_cc.size()},
                {"cam_better_fraction", r.cam_better_fraction},
                {"cc", to_json(r.cc_summary)},
                {"cam", to_json(r.cam_summary)}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace cam
