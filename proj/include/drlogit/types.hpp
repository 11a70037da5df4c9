#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace drlogit {

/// Observations of a binary response y, covariates of interest z (n x p) and
/// other covariates x (n x q).
struct Dataset {
    Eigen::VectorXi y;
    Eigen::MatrixXd z;
    Eigen::MatrixXd x;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index p() const { return z.cols(); }
    Eigen::Index q() const { return x.cols(); }

    /// Throws std::invalid_argument on shape mismatch or a non-binary y.
    void validate() const;
    Eigen::Index count(int response) const;
};

/// Coefficients of the outcome model expit(beta'z + alpha'b(x)).
struct OutcomeModelParams {
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha;
};

enum class Family { Gaussian, Bernoulli };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/// Model for E(Z | Y = y0, X): one row of gamma per Z component. Gaussian
/// components have mean gamma_j'b(x) and variance resid_var(j); Bernoulli
/// components have success probability expit(gamma_j'b(x)).
struct CovariateModelParams {
    Eigen::MatrixXd gamma;
    std::vector<Family> families;
    Eigen::VectorXd resid_var;

    Eigen::Index p() const { return gamma.rows(); }
    Eigen::Index m() const { return gamma.cols(); }

    Eigen::VectorXd mean(const Eigen::VectorXd& bx) const;
    // d mean_j / d (gamma_j'b): 1 for Gaussian, f(1-f) for Bernoulli.
    Eigen::VectorXd mean_slope(const Eigen::VectorXd& bx) const;
};

enum class PhiVariant { Identity, Simple, Optimal };

std::string_view to_string(PhiVariant variant);
PhiVariant parse_phi_variant(std::string_view name);

/// Choice of the p x p weight function phi(X).
struct PhiSpec {
    PhiVariant variant = PhiVariant::Identity;
    int quadrature_order = 21;  // Gauss-Hermite order, Optimal with Gaussian Z only

    void validate() const;
};

/// Which conditional law of Z the estimating function residualizes against.
enum class Side { Y0, Y1 };

}  // namespace drlogit
