#pragma once

#include <Eigen/Dense>

#include <functional>

namespace drlogit::detail {

struct NewtonOptions {
    int max_iterations = 100;
    int max_halvings = 50;
    double tolerance = 1e-10;  // max-norm of F required for convergence
    double target = 1e-13;     // iterate until here when rounding allows
};

struct NewtonResult {
    Eigen::VectorXd theta;
    int iterations = 0;
    int halvings = 0;
    double norm = 0.0;
    double condition = 0.0;
    bool converged = false;
};

// Fills F(theta) and, when J is non-null, the Jacobian dF/dtheta.
using EquationSystem =
    std::function<void(const Eigen::VectorXd& theta, Eigen::VectorXd& F, Eigen::MatrixXd* J)>;

/// Newton-Raphson with step halving on the max-norm of F. Throws
/// SingularMatrixError when the Jacobian is rank deficient.
NewtonResult newton_solve(const EquationSystem& system, Eigen::VectorXd theta0,
                          const NewtonOptions& options = {});

double max_norm(const Eigen::VectorXd& v);
double condition_number(const Eigen::MatrixXd& m);

}  // namespace drlogit::detail
