#pragma once

#include "drlogit/basis.hpp"
#include "drlogit/quadrature.hpp"
#include "drlogit/types.hpp"

#include <Eigen/Dense>

#include <functional>
#include <variant>

namespace drlogit {

using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// 1 / (1 + exp(-c)) without overflow for any finite c.
double expit(double c);
double logit(double p);

// beta'z + alpha'b(x); throws std::invalid_argument on dimension mismatch.
double linear_predictor(const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
                        const Basis& basis);

double pi_eval(const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
               const Basis& basis);

// y exp(-eta) - (1 - y), i.e. (y - pi) / pi.
double zeta0(int y, const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
             const Basis& basis);
// y - (1 - y) exp(eta), i.e. (y - pi) / (1 - pi).
double zeta1(int y, const VecRef& z, const VecRef& x, const OutcomeModelParams& params,
             const Basis& basis);

double zeta0_from_eta(int y, double eta);
double zeta1_from_eta(int y, double eta);
double zeta_from_eta(Side side, int y, double eta);

struct PhiValue {
    Eigen::MatrixXd matrix;
    double condition = 1.0;  // of the inverted matrix (Optimal); 1 otherwise
};

/// phi(x) for the Y = 0 estimating function (side Y0) or its Y = 1 mirror.
///
/// Identity gives I. Simple gives P(Y = y0 | Z = 0, X) I, i.e. expit(g) for Y0
/// and expit(-g) for Y1. Optimal gives
///   E[(Z - f)(Z - f)' | Y = y0, X] * E^{-1}[w (Z - f)(Z - f)' | Y = y0, X]
/// with w = 1/pi (Y0) or 1/(1 - pi) (Y1), the expectations taken with Z
/// components independent under their declared families: Gauss-Hermite of
/// the given order for Gaussian components and two-point enumeration for
/// Bernoulli ones. At most 3 Gaussian components are accepted, and the
/// inverted matrix must have condition number <= 1e12.
PhiValue phi_eval(const PhiSpec& spec, const VecRef& x, const OutcomeModelParams& outcome,
                  const CovariateModelParams& covar, const Basis& basis, Side side = Side::Y0);

// Same, with a pre-built quadrature rule (order must match spec).
PhiValue phi_eval(const PhiSpec& spec, const VecRef& x, const OutcomeModelParams& outcome,
                  const CovariateModelParams& covar, const Basis& basis, Side side,
                  const GaussHermiteRule& rule);

/// zeta(y, z, x) * phi * (z - f(x)), with phi supplied directly.
Eigen::VectorXd r_eval_fixed(Side side, int y, const VecRef& z, const VecRef& x,
                             const VecRef& beta, const VecRef& alpha,
                             const CovariateModelParams& covar, const Eigen::MatrixXd& phi,
                             const Basis& basis);

/// The doubly robust estimating function
///   {y exp(-beta'z - g(x; alpha)) - (1 - y)} phi(x) {z - f(x; gamma)}.
/// phi is evaluated at (beta, alpha).
Eigen::VectorXd r_eval(int y, const VecRef& z, const VecRef& x, const VecRef& beta,
                       const VecRef& alpha, const CovariateModelParams& covar,
                       const PhiSpec& phi, const Basis& basis);

/// Mirror of r_eval using zeta1 and a model f1 for E(Z | Y = 1, X).
Eigen::VectorXd r1_eval(int y, const VecRef& z, const VecRef& x, const VecRef& beta,
                        const VecRef& alpha, const CovariateModelParams& covar1,
                        const PhiSpec& phi, const Basis& basis);

/// Arbitrary instrument u(z, x) -> p-vector. Its conditional mean given
/// (Y = 0, X) is computed by enumeration, so every Z component must be
/// Bernoulli.
using InstrumentFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& x)>;
using Instrument = std::variant<PhiSpec, InstrumentFn>;

// E[u(Z, x) | Y = 0, X = x] under the declared Bernoulli family.
Eigen::VectorXd instrument_conditional_mean(const InstrumentFn& u, const VecRef& x,
                                            const CovariateModelParams& covar,
                                            const Basis& basis);

/// {y / pi(z, x) - 1} {u(z, x) - E[u | Y = 0, x]}. A PhiSpec instrument means
/// u = phi(x) z, whose conditional mean is phi(x) f(x).
Eigen::VectorXd tau_prime_eval(int y, const VecRef& z, const VecRef& x, const VecRef& beta,
                               const VecRef& alpha, const CovariateModelParams& covar,
                               const Instrument& u, const Basis& basis);

}  // namespace drlogit
