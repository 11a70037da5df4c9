#pragma once

#include "drlogit/basis.hpp"
#include "drlogit/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace drlogit {

enum class FitMethod { MLE, Calibrated };

struct OutcomeFit {
    OutcomeModelParams params;
    FitMethod method = FitMethod::MLE;
    // Averaged information (negative Jacobian of the mean estimating equation).
    Eigen::MatrixXd info_matrix;
    // n x (p + m); row i is info^{-1} times the observation-level equation term.
    Eigen::MatrixXd s1;
    bool converged = false;
    int iterations = 0;
    double eq_norm = 0.0;
};

struct CovariateFit {
    CovariateModelParams params;
    // n x (p * m), component j in columns [j*m, (j+1)*m); zero outside the subsample.
    Eigen::MatrixXd s2;
    Side side = Side::Y0;
    int subsample_size = 0;
    bool converged = false;
    double eq_norm = 0.0;
};

/// Logistic regression of y on [z, b(x)] by Newton-Raphson with step halving,
/// starting from zero.
OutcomeFit fit_outcome_mle(const Dataset& data, const Basis& basis);

/// Root of n^{-1} sum {y / pi - 1} [z, b(x)] = 0, started at the MLE.
OutcomeFit fit_outcome_calibrated(const Dataset& data, const Basis& basis);

/// Fits E(Z | Y = 0, X): least squares for Gaussian components, logistic
/// regression for Bernoulli components, each on the Y = 0 rows.
CovariateFit fit_covariate(const Dataset& data, const Basis& basis,
                           const std::vector<Family>& families);

/// Same on the Y = 1 rows, for E(Z | Y = 1, X).
CovariateFit fit_covariate_y1(const Dataset& data, const Basis& basis,
                              const std::vector<Family>& families);

CovariateFit fit_covariate(const Dataset& data, const Basis& basis,
                           const std::vector<Family>& families, Side side);

// Max-norm of the mean score / calibrated equation at the given parameters.
double outcome_equation_norm(const Dataset& data, const Basis& basis,
                             const OutcomeModelParams& params, FitMethod method);

}  // namespace drlogit
