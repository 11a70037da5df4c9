#include "drlogit/model_core.hpp"

#include "drlogit/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace drlogit {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr int kMaxGaussianComponents = 3;

void check_outcome_dims(const VecRef& z, const VecRef& beta, const VecRef& alpha,
                        const Basis& basis) {
    if (z.size() != beta.size()) {
        throw std::invalid_argument("dimension mismatch: z has " + std::to_string(z.size()) +
                                    " entries, beta has " + std::to_string(beta.size()));
    }
    if (alpha.size() != basis.dim()) {
        throw std::invalid_argument("dimension mismatch: alpha has " + std::to_string(alpha.size()) +
                                    " entries, basis has " + std::to_string(basis.dim()) + " terms");
    }
}

void check_covar_dims(const CovariateModelParams& covar, Eigen::Index p, const Basis& basis) {
    if (covar.p() != p || covar.m() != basis.dim() ||
        static_cast<Eigen::Index>(covar.families.size()) != p) {
        throw std::invalid_argument("dimension mismatch: covariate model is " +
                                    std::to_string(covar.p()) + "x" + std::to_string(covar.m()) +
                                    ", expected " + std::to_string(p) + "x" +
                                    std::to_string(basis.dim()));
    }
}

// One-dimensional support of Z_j given (Y = y0, X): nodes with probabilities.
struct Marginal {
    Eigen::VectorXd values;
    Eigen::VectorXd probs;
};

Marginal component_marginal(const CovariateModelParams& covar, Eigen::Index j, double mean,
                            const GaussHermiteRule& rule) {
    Marginal out;
    if (covar.families[static_cast<size_t>(j)] == Family::Bernoulli) {
        out.values = Eigen::Vector2d(0.0, 1.0);
        out.probs = Eigen::Vector2d(1.0 - mean, mean);
    } else {
        const double var = covar.resid_var(j);
        if (!(var > 0.0)) throw std::invalid_argument("Gaussian component needs resid_var > 0");
        out.values = mean + std::sqrt(var) * rule.nodes.array();
        out.probs = rule.weights;
    }
    return out;
}

// Calls visit(z, prob) for every point of the product support.
template <class Visit>
void for_each_support_point(const std::vector<Marginal>& marginals, Visit&& visit) {
    const size_t p = marginals.size();
    std::vector<Eigen::Index> idx(p, 0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(p));
    while (true) {
        double prob = 1.0;
        for (size_t j = 0; j < p; ++j) {
            z(static_cast<Eigen::Index>(j)) = marginals[j].values(idx[j]);
            prob *= marginals[j].probs(idx[j]);
        }
        visit(z, prob);
        size_t j = 0;
        while (j < p && ++idx[j] == marginals[j].values.size()) idx[j++] = 0;
        if (j == p) break;
    }
}

}  // namespace

double expit(double c) {
    if (c >= 0.0) return 1.0 / (1.0 + std::exp(-c));
    const double e = std::exp(c);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double linear_predictor(const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
                        const Basis& basis) {
    check_outcome_dims(z, params.beta, params.alpha, basis);
    return params.beta.dot(z) + params.alpha.dot(basis.eval(x));
}

double pi_eval(const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
               const Basis& basis) {
    return expit(linear_predictor(z, x, params, basis));
}

double zeta0_from_eta(int y, double eta) { return y == 1 ? std::exp(-eta) : -1.0; }

double zeta1_from_eta(int y, double eta) { return y == 1 ? 1.0 : -std::exp(eta); }

double zeta_from_eta(Side side, int y, double eta) {
    return side == Side::Y0 ? zeta0_from_eta(y, eta) : zeta1_from_eta(y, eta);
}

double zeta0(int y, const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
             const Basis& basis) {
    return zeta0_from_eta(y, linear_predictor(z, x, params, basis));
}

double zeta1(int y, const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
             const Basis& basis) {
    return zeta1_from_eta(y, linear_predictor(z, x, params, basis));
}

PhiValue phi_eval(const PhiSpec& spec, const VecRef& x, const OutcomeModelParams& outcome,
                  const CovariateModelParams& covar, const Basis& basis, Side side) {
    if (spec.variant != PhiVariant::Optimal) {
        return phi_eval(spec, x, outcome, covar, basis, side, GaussHermiteRule{});
    }
    spec.validate();
    return phi_eval(spec, x, outcome, covar, basis, side, gauss_hermite(spec.quadrature_order));
}

PhiValue phi_eval(const PhiSpec& spec, const VecRef& x, const OutcomeModelParams& outcome,
                  const CovariateModelParams& covar, const Basis& basis, Side side,
                  const GaussHermiteRule& rule) {
    const Eigen::Index p = outcome.beta.size();
    if (outcome.alpha.size() != basis.dim()) {
        throw std::invalid_argument("dimension mismatch: alpha vs basis");
    }
    const Eigen::VectorXd bx = basis.eval(x);
    const double g = outcome.alpha.dot(bx);
    // +1 selects the Y = 1 mirror: weights 1/(1 - pi) and P(Y = 0 | Z = 0, X).
    const double sign = side == Side::Y0 ? -1.0 : 1.0;

    switch (spec.variant) {
        case PhiVariant::Identity:
            return {Eigen::MatrixXd::Identity(p, p), 1.0};
        case PhiVariant::Simple:
            return {expit(-sign * g) * Eigen::MatrixXd::Identity(p, p), 1.0};
        case PhiVariant::Optimal:
            break;
    }

    check_covar_dims(covar, p, basis);
    int n_gauss = 0;
    for (auto fam : covar.families) n_gauss += fam == Family::Gaussian;
    if (n_gauss > kMaxGaussianComponents) {
        throw std::invalid_argument("optimal phi: at most 3 Gaussian Z components (tensor quadrature)");
    }
    if (n_gauss > 0 && rule.order() != spec.quadrature_order) {
        throw std::invalid_argument("optimal phi: quadrature rule order does not match spec");
    }

    const Eigen::VectorXd f = covar.mean(bx);
    std::vector<Marginal> marginals;
    marginals.reserve(static_cast<size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) marginals.push_back(component_marginal(covar, j, f(j), rule));

    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(p, p);
    for_each_support_point(marginals, [&](const Eigen::VectorXd& z, double prob) {
        if (prob == 0.0) return;
        const Eigen::VectorXd d = z - f;
        const Eigen::MatrixXd dd = prob * d * d.transpose();
        outer += dd;
        weighted += (1.0 + std::exp(sign * (outcome.beta.dot(z) + g))) * dd;
    });

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted);
    const auto& sv = svd.singularValues();
    const double cond = sv(p - 1) > 0.0 ? sv(0) / sv(p - 1) : INFINITY;
    if (!(cond <= kMaxCondition)) {
        throw SingularMatrixError("optimal phi: weighted residual covariance is singular (condition " +
                                  std::to_string(cond) + ")");
    }
    // Both factors are symmetric, so A W^{-1} = (W^{-1} A)'.
    Eigen::MatrixXd phi = weighted.partialPivLu().solve(outer).transpose();
    return {std::move(phi), cond};
}

Eigen::VectorXd r_eval_fixed(Side side, int y, const VecRef& z, const VecRef& x,
                             const VecRef& beta, const VecRef& alpha,
                             const CovariateModelParams& covar, const Eigen::MatrixXd& phi,
                             const Basis& basis) {
    check_outcome_dims(z, beta, alpha, basis);
    check_covar_dims(covar, z.size(), basis);
    if (phi.rows() != z.size() || phi.cols() != z.size()) {
        throw std::invalid_argument("dimension mismatch: phi must be p x p");
    }
    const Eigen::VectorXd bx = basis.eval(x);
    const double eta = beta.dot(z) + alpha.dot(bx);
    return zeta_from_eta(side, y, eta) * (phi * (z - covar.mean(bx)));
}

Eigen::VectorXd r_eval(int y, const VecRef& z, const VecRef& x, const VecRef& beta,
                       const VecRef& alpha, const CovariateModelParams& covar,
                       const PhiSpec& phi, const Basis& basis) {
    check_outcome_dims(z, beta, alpha, basis);
    const PhiValue pv = phi_eval(phi, x, {beta, alpha}, covar, basis, Side::Y0);
    return r_eval_fixed(Side::Y0, y, z, x, beta, alpha, covar, pv.matrix, basis);
}

Eigen::VectorXd r1_eval(int y, const VecRef& z, const VecRef& x, const VecRef& beta,
                        const VecRef& alpha, const CovariateModelParams& covar1,
                        const PhiSpec& phi, const Basis& basis) {
    check_outcome_dims(z, beta, alpha, basis);
    const PhiValue pv = phi_eval(phi, x, {beta, alpha}, covar1, basis, Side::Y1);
    return r_eval_fixed(Side::Y1, y, z, x, beta, alpha, covar1, pv.matrix, basis);
}

Eigen::VectorXd instrument_conditional_mean(const InstrumentFn& u, const VecRef& x,
                                            const CovariateModelParams& covar,
                                            const Basis& basis) {
    for (auto fam : covar.families) {
        if (fam != Family::Bernoulli) {
            throw std::invalid_argument(
                "general instruments are supported for Bernoulli Z only; use u = phi(x) z");
        }
    }
    const Eigen::VectorXd f = covar.mean(basis.eval(x));
    std::vector<Marginal> marginals;
    for (Eigen::Index j = 0; j < covar.p(); ++j) {
        marginals.push_back({Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0 - f(j), f(j))});
    }
    const Eigen::VectorXd xv = x;
    Eigen::VectorXd acc;
    for_each_support_point(marginals, [&](const Eigen::VectorXd& z, double prob) {
        const Eigen::VectorXd v = u(z, xv);
        if (acc.size() == 0) acc = Eigen::VectorXd::Zero(v.size());
        acc += prob * v;
    });
    return acc;
}

Eigen::VectorXd tau_prime_eval(int y, const VecRef& z, const VecRef& x, const VecRef& beta,
                               const VecRef& alpha, const CovariateModelParams& covar,
                               const Instrument& u, const Basis& basis) {
    check_outcome_dims(z, beta, alpha, basis);
    check_covar_dims(covar, z.size(), basis);
    const double eta = beta.dot(z) + alpha.dot(basis.eval(x));
    // y / pi - 1 written as (y - pi) / pi, with y - pi formed without cancellation.
    const double resid = (y == 1 ? expit(-eta) : -expit(eta)) / expit(eta);

    if (const auto* spec = std::get_if<PhiSpec>(&u)) {
        const Eigen::MatrixXd phi = phi_eval(*spec, x, {beta, alpha}, covar, basis, Side::Y0).matrix;
        // u - E[u | Y = 0, X] = phi(x) z - phi(x) f(x) for the linear instrument.
        return resid * (phi * (z - covar.mean(basis.eval(x))));
    }
    const auto& fn = std::get<InstrumentFn>(u);
    const Eigen::VectorXd center = instrument_conditional_mean(fn, x, covar, basis);
    return resid * (fn(z, x) - center);
}

}  // namespace drlogit
