#include "cam/cam_core.hpp"

#include <cmath>

#include "cam/error.hpp"

namespace cam {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DimensionMismatch(what);
}

void check_geometry(const MseGeometry& g) {
    const auto k = g.omega.size();
    require(g.lambda.rows() == k && g.lambda.cols() == k, "lambda must be |M| x |M|");
    require(g.biasB.size() == 0 || g.biasB.size() == k, "biasB length differs from |M|");
}

}  // namespace

double combine(const CamComponents& c, const Eigen::VectorXd& gamma) {
    require(c.theta0M.size() == c.thetaM.size(), "theta0M and thetaM lengths differ");
    require(gamma.size() == c.theta0M.size(), "gamma length differs from |M|");
    double adj = 0.0;
    for (Eigen::Index k = 0; k < gamma.size(); ++k)
        if (gamma[k] != 0.0) adj += gamma[k] * (c.theta0M[k] - c.thetaM[k]);
    return c.theta0 - adj;
}

double mse_difference(const Eigen::VectorXd& gamma, const MseGeometry& g) {
    check_geometry(g);
    require(gamma.size() == g.omega.size(), "gamma length differs from |M|");
    const Eigen::MatrixXd lam = 0.5 * (g.lambda + g.lambda.transpose());
    double quad = gamma.dot(lam * gamma);
    double lin = gamma.dot(g.omega);
    if (g.biasB.size() > 0) {
        const double gb = gamma.dot(g.biasB);
        quad += gb * gb;
        lin += g.bias0 * gb;
    }
    return quad - 2.0 * lin;
}

PseudoInverse symmetric_pinv(const Eigen::MatrixXd& a, double rel_tol) {
    require(a.rows() == a.cols(), "pseudo-inverse needs a square matrix");
    PseudoInverse out;
    out.matrix = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    if (a.size() == 0) return out;
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    const auto& ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || !std::isfinite(top)) return out;
    const double cut = rel_tol * top;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev[k] < -cut) out.indefinite = true;
        if (std::abs(ev[k]) <= cut) continue;
        const auto v = eig.eigenvectors().col(k);
        out.matrix += (v * v.transpose()) / ev[k];
        ++out.rank;
    }
    return out;
}

OptimalGamma optimal_gamma(const MseGeometry& g, double rel_tol) {
    check_geometry(g);
    if (g.biasB.size() > 0 && g.biasB.cwiseAbs().maxCoeff() != 0.0)
        throw Error("optimal gamma is only defined for unbiased adjustments (biasB = 0)");
    const auto pinv = symmetric_pinv(g.lambda, rel_tol);
    OptimalGamma out;
    out.gamma = pinv.matrix * g.omega;
    out.reduction = g.omega.dot(out.gamma);
    out.rank = pinv.rank;
    out.indefinite = pinv.indefinite;
    return out;
}

}  // namespace cam
