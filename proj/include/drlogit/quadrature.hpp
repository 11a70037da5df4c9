#pragma once

#include <Eigen/Dense>

namespace drlogit {

/// Gauss-Hermite rule for expectations under the standard normal:
/// E[h(T)] ~= sum_k weights(k) * h(nodes(k)), T ~ N(0, 1).
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    int order() const { return static_cast<int>(nodes.size()); }
};

// Golub-Welsch on the probabilists' Hermite recurrence. order >= 1.
GaussHermiteRule gauss_hermite(int order);

// E[h(Z)] for Z ~ N(mean, variance).
template <class F>
double normal_expectation(const GaussHermiteRule& rule, double mean, double variance, F&& h) {
    const double sd = std::sqrt(variance);
    double acc = 0.0;
    for (int k = 0; k < rule.order(); ++k) {
        acc += rule.weights(k) * h(mean + sd * rule.nodes(k));
    }
    return acc;
}

}  // namespace drlogit
