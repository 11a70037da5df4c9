#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

namespace drlogit {

/// Joint law of (Y, Z, X) on a finite support. prob[y](iz, ix) is
/// P(Y = y, Z = z_support[iz], X = x_support[ix]).
struct FiniteLaw {
    std::vector<Eigen::VectorXd> z_support;
    std::vector<Eigen::VectorXd> x_support;
    std::array<Eigen::MatrixXd, 2> prob;

    Eigen::Index nz() const { return static_cast<Eigen::Index>(z_support.size()); }
    Eigen::Index nx() const { return static_cast<Eigen::Index>(x_support.size()); }

    double total() const { return prob[0].sum() + prob[1].sum(); }
    // P(Y = 1 | Z = z_iz, X = x_ix)
    double pi(Eigen::Index iz, Eigen::Index ix) const;

    // Throws std::invalid_argument if the total deviates from 1 by more than 1e-10
    // or any cell is negative.
    void validate() const;

    /// Exact E[fn(y, z, x)] by enumeration.
    Eigen::VectorXd expectation(
        const std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>&
            fn) const;
};

/// Builds the law p(y, z | x) proportional to
/// exp(beta'z y) p(z | Y = 0, x) p(y | Z = 0, x), with p(y = 1 | Z = 0, x) =
/// expit(g_star(ix)). pz_given_y0 is nz x nx with columns summing to one.
FiniteLaw make_logistic_law(const Eigen::VectorXd& beta, std::vector<Eigen::VectorXd> z_support,
                            std::vector<Eigen::VectorXd> x_support,
                            const Eigen::VectorXd& x_probs, const Eigen::MatrixXd& pz_given_y0,
                            const Eigen::VectorXd& g_star);

/// Max over x in the support of
///   | E[h pi (1 - pi) | X] - P(Y = 0 | X) E[h pi | Y = 0, X] |
/// with pi = P(Y = 1 | Z, X) taken from the law. h is tabulated nz x nx.
/// Throws std::invalid_argument if the law is not normalized, P(Y = 0 | X) = 0
/// for a support point, or pi leaves (0, 1) on the support.
double orthocomp_identity_check(const Eigen::MatrixXd& h, const FiniteLaw& law);

}  // namespace drlogit
