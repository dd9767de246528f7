#pragma once

#include <Eigen/Dense>

namespace cam {

struct CamComponents {
    double theta0 = 0.0;
    Eigen::VectorXd theta0M;
    Eigen::VectorXd thetaM;
};

struct MseGeometry {
    Eigen::VectorXd omega;
    Eigen::MatrixXd lambda;
    Eigen::VectorXd biasB;  // empty is read as zero
    double bias0 = 0.0;
};

/// theta0 - gamma' (theta0M - thetaM). Zero weights contribute nothing, so
/// gamma = 0 returns theta0 bit-exactly.
double combine(const CamComponents& c, const Eigen::VectorXd& gamma);

double mse_difference(const Eigen::VectorXd& gamma, const MseGeometry& g);

struct PseudoInverse {
    Eigen::MatrixXd matrix;
    int rank = 0;
    bool indefinite = false;
};

/// Pseudo-inverse of the symmetrized matrix; eigenvalues with magnitude
/// below rel_tol times the largest are treated as zero.
PseudoInverse symmetric_pinv(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

struct OptimalGamma {
    Eigen::VectorXd gamma;
    double reduction = 0.0;
    int rank = 0;
    bool indefinite = false;
};

/// gamma* = pinv(Lambda) Omega. Throws when biasB is nonzero.
OptimalGamma optimal_gamma(const MseGeometry& g, double rel_tol = 1e-10);

}  // namespace cam
