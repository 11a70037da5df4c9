#pragma once

#include "drlogit/basis.hpp"
#include "drlogit/model_core.hpp"
#include "drlogit/nuisance.hpp"
#include "drlogit/types.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace drlogit {

struct SolveDiagnostics {
    int iterations = 0;
    double final_eq_norm = 0.0;
    double jacobian_condition = 0.0;
    int step_halvings = 0;
    bool converged = false;
    bool restarted = false;  // Newton restarted from beta = 0
};

struct InfluenceExpansion {
    Eigen::MatrixXd H;   // p x p, mean d r / d beta
    Eigen::MatrixXd B1;  // p x m, mean d r / d alpha
    Eigen::MatrixXd B2;  // p x (p * m), mean d r / d gamma
    Eigen::MatrixXd influence;   // n x p
    Eigen::MatrixXd covariance;  // p x p
};

struct EstimateReport {
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd std_errors;
    std::vector<std::pair<double, double>> wald_ci;
    double level = 0.95;
    Eigen::MatrixXd influence;
    SolveDiagnostics diagnostics;
    PhiSpec phi_used;
    Side side = Side::Y0;
};

/// Per-observation quantities of the estimating function with phi frozen at
/// the plugged-in nuisance estimates.
class EstimatingSystem {
public:
    EstimatingSystem(const Dataset& data, const OutcomeFit& outcome, const CovariateFit& covar,
                     const PhiSpec& phi, const Basis& basis, Side side);

    Eigen::Index n() const { return y_.size(); }
    Eigen::Index p() const { return z_.cols(); }

    const Eigen::MatrixXd& phi(Eigen::Index i) const { return phi_[static_cast<size_t>(i)]; }

    // n^{-1} sum r_i(beta) and its Jacobian in beta.
    Eigen::VectorXd mean_r(const Eigen::VectorXd& beta) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& beta) const;
    Eigen::MatrixXd r_values(const Eigen::VectorXd& beta) const;  // n x p

    InfluenceExpansion expand(const Eigen::VectorXd& beta, const OutcomeFit& outcome,
                              const CovariateFit& covar) const;

private:
    Side side_;
    Eigen::VectorXi y_;
    Eigen::MatrixXd z_;
    Eigen::MatrixXd b_;      // n x m
    Eigen::VectorXd g_;      // g(x_i; alpha-hat)
    Eigen::MatrixXd resid_;  // n x p, z_i - f(x_i)
    Eigen::MatrixXd slope_;  // n x p, d f_j / d (gamma_j'b)
    std::vector<Eigen::MatrixXd> phi_;
};

/// Root in beta of n^{-1} sum r(y, z, x; beta, alpha-hat, gamma-hat, phi) = 0
/// by Newton with step halving from the outcome fit's beta, restarting from
/// zero on failure; sandwich covariance from influence_assemble.
EstimateReport solve_beta(const Dataset& data, const OutcomeFit& outcome,
                          const CovariateFit& covar, const PhiSpec& phi, const Basis& basis,
                          double level = 0.95);

/// Y = 1 mirror: zeta1 residual and covar1 from fit_covariate_y1.
EstimateReport solve_beta_y1(const Dataset& data, const OutcomeFit& outcome,
                             const CovariateFit& covar1, const PhiSpec& phi, const Basis& basis,
                             double level = 0.95);

/// Closed-form root for scalar binary Z with phi = expit(g):
/// beta = -log(A / B).
double closed_form_binary(const Dataset& data, const OutcomeFit& outcome,
                          const CovariateFit& covar, const Basis& basis);

/// H, B1, B2, influence values and covariance n^{-2} sum psi_i psi_i' at
/// beta_hat, with psi_i = -H^{-1} (r_i + B1 s1_i[alpha] + B2 s2_i).
InfluenceExpansion influence_assemble(const Dataset& data, const Eigen::VectorXd& beta_hat,
                                      const OutcomeFit& outcome, const CovariateFit& covar,
                                      const PhiSpec& phi, const Basis& basis,
                                      Side side = Side::Y0);

struct BetaSolution {
    Eigen::VectorXd beta;
    SolveDiagnostics diagnostics;
};

/// Root of n^{-1} sum tau'(y, z, x; beta, alpha-hat, gamma-hat, u) = 0.
BetaSolution solve_beta_instrument(const Dataset& data, const OutcomeFit& outcome,
                                   const CovariateFit& covar, const Instrument& u,
                                   const Basis& basis);

struct NamedVariance {
    std::string name;
    double variance = 0.0;
};

struct EfficiencyRow {
    std::string name;
    double variance = 0.0;
    double ratio_to_reference = 1.0;  // variance / variance of the first entry
    double ratio_to_best = 1.0;       // variance / smallest variance
};

std::vector<EfficiencyRow> efficiency_compare(std::span<const NamedVariance> entries);

// Uses covariance(component, component) of each report.
std::vector<EfficiencyRow> efficiency_compare(std::span<const std::pair<std::string, EstimateReport>> reports,
                                              Eigen::Index component = 0);

// Two-sided standard normal quantile for a confidence level in (0, 1).
double normal_critical_value(double level);

}  // namespace drlogit
