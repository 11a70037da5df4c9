#pragma once

#include "drlogit/basis.hpp"
#include "drlogit/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <random>
#include <vector>

namespace testsupport {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double a : v) out(i++) = a;
    return out;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a(i), b(i)));
    return m;
}

// Relative error measured against the largest entry, for vectors whose
// entries may legitimately cancel to zero.
inline double norm_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Long-double reference for expit.
inline long double expit_ref(long double c) { return 1.0L / (1.0L + std::exp(-c)); }

inline drlogit::CovariateModelParams covar(const Eigen::MatrixXd& gamma,
                                           std::vector<drlogit::Family> families,
                                           Eigen::VectorXd resid_var = {}) {
    drlogit::CovariateModelParams c;
    c.gamma = gamma;
    c.families = std::move(families);
    c.resid_var = resid_var.size() ? resid_var : Eigen::VectorXd::Ones(gamma.rows());
    return c;
}

// Intercept-only covariate model whose mean is exactly f.
inline drlogit::CovariateModelParams gaussian_mean(double f, double var = 1.0) {
    return covar(Eigen::MatrixXd::Constant(1, 1, f), {drlogit::Family::Gaussian}, vec({var}));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::VectorXd uniform_vec(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, lo, hi);
    return v;
}

}  // namespace testsupport
