#include "drlogit/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace drlogit {

namespace {

// Orthonormal probabilists' Hermite values p_0..p_order at x, p_j = He_j / sqrt(j!).
Eigen::VectorXd orthonormal_hermite(int order, double x) {
    Eigen::VectorXd p(order + 1);
    p(0) = 1.0;
    if (order >= 1) p(1) = x;
    for (int j = 1; j < order; ++j) {
        p(j + 1) = (x * p(j) - std::sqrt(static_cast<double>(j)) * p(j - 1)) /
                   std::sqrt(static_cast<double>(j + 1));
    }
    return p;
}

}  // namespace

GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) throw std::invalid_argument("Gauss-Hermite order must be positive");
    // Golub-Welsch: x He_k = He_{k+1} + k He_{k-1}.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);

    GaussHermiteRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights.resize(order);
    for (int k = 0; k < order; ++k) {
        double x = rule.nodes(k);
        // Newton polish on p_order; p_order' = sqrt(order) p_{order-1}.
        for (int it = 0; it < 3; ++it) {
            const Eigen::VectorXd p = orthonormal_hermite(order, x);
            x -= p(order) / (std::sqrt(static_cast<double>(order)) * p(order - 1));
        }
        rule.nodes(k) = x;
        // Christoffel weight, accurate in relative terms out in the tails.
        rule.weights(k) = 1.0 / orthonormal_hermite(order, x).head(order).squaredNorm();
    }
    for (int k = 0; k < order / 2; ++k) {
        const int l = order - 1 - k;
        const double node = 0.5 * (rule.nodes(l) - rule.nodes(k));
        const double w = 0.5 * (rule.weights(k) + rule.weights(l));
        rule.nodes(k) = -node;
        rule.nodes(l) = node;
        rule.weights(k) = rule.weights(l) = w;
    }
    if (order % 2 == 1) rule.nodes(order / 2) = 0.0;
    return rule;
}

}  // namespace drlogit
