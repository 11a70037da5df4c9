#include "drlogit/nuisance.hpp"

#include "drlogit/errors.hpp"
#include "drlogit/model_core.hpp"
#include "newton.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace drlogit {

namespace {

// Linear predictors beyond this on a converged fit mean fitted probabilities
// within ~1e-13 of 0 or 1: the data are (quasi-)separated.
constexpr double kSeparationEta = 30.0;
constexpr double kSeparationInfoRatio = 1e-8;
constexpr double kMinCalibratedPi = 1e-12;

void require_both_responses(const Dataset& data) {
    const auto n1 = data.count(1);
    if (n1 == 0 || n1 == data.n()) {
        throw std::invalid_argument("outcome fit needs at least one y = 0 and one y = 1 row");
    }
}

void require_full_rank(const Eigen::MatrixXd& design, const std::string& what) {
    if (design.rows() < design.cols()) {
        throw SingularMatrixError(what + ": fewer rows (" + std::to_string(design.rows()) +
                                  ") than columns (" + std::to_string(design.cols()) + ")");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) {
        throw SingularMatrixError(what + ": design matrix is rank deficient (rank " +
                                  std::to_string(qr.rank()) + " < " +
                                  std::to_string(design.cols()) + ")");
    }
}

Eigen::MatrixXd outcome_design(const Dataset& data, const Basis& basis) {
    Eigen::MatrixXd w(data.n(), data.p() + basis.dim());
    w << data.z, basis.design(data.x);
    return w;
}

double response_residual(int y, double eta) { return y == 1 ? expit(-eta) : -expit(eta); }

struct LogisticResult {
    Eigen::VectorXd theta;
    Eigen::MatrixXd info;    // mean pi(1 - pi) w w'
    Eigen::MatrixXd scores;  // rows (y_i - pi_i) w_i
    detail::NewtonResult newton;
};

LogisticResult logistic_mle(const Eigen::MatrixXd& w, const Eigen::VectorXi& y,
                            const std::string& what) {
    const double n = static_cast<double>(w.rows());
    const detail::EquationSystem system = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& F,
                                              Eigen::MatrixXd* J) {
        const Eigen::VectorXd eta = w * theta;
        Eigen::VectorXd resid(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = response_residual(y(i), eta(i));
        F = w.transpose() * resid / n;
        if (J) {
            Eigen::VectorXd v(eta.size());
            for (Eigen::Index i = 0; i < eta.size(); ++i) {
                const double pi = expit(eta(i));
                v(i) = pi * (1.0 - pi);
            }
            *J = -(w.transpose() * v.asDiagonal() * w) / n;
        }
    };
    LogisticResult out;
    out.newton = detail::newton_solve(system, Eigen::VectorXd::Zero(w.cols()));
    const Eigen::VectorXd eta = w * out.newton.theta;
    if (!out.newton.converged) {
        throw ConvergenceError(what + ": Newton-Raphson did not converge in " +
                               std::to_string(out.newton.iterations) +
                               " iterations (separated data?)");
    }
    out.theta = out.newton.theta;
    out.scores.resize(w.rows(), w.cols());
    Eigen::VectorXd v(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        out.scores.row(i) = response_residual(y(i), eta(i)) * w.row(i);
        const double pi = expit(eta(i));
        v(i) = pi * (1.0 - pi);
    }
    out.info = (w.transpose() * v.asDiagonal() * w) / n;
    // Separated data: Newton drifts to infinity along the separating direction,
    // where the information vanishes relative to the design's own Gram matrix.
    if (eta.cwiseAbs().maxCoeff() > kSeparationEta) {
        const Eigen::MatrixXd gram = (w.transpose() * w) / n;
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ratio(out.info, gram, Eigen::EigenvaluesOnly);
        if (ratio.info() != Eigen::Success || ratio.eigenvalues().minCoeff() < kSeparationInfoRatio) {
            throw ConvergenceError(what + ": fitted probabilities at 0 or 1 (separated data)");
        }
    }
    return out;
}

OutcomeFit package(const Dataset& data, const Eigen::VectorXd& theta, FitMethod method,
                   const Eigen::MatrixXd& info, const Eigen::MatrixXd& terms,
                   const detail::NewtonResult& newton) {
    OutcomeFit fit;
    fit.method = method;
    fit.params.beta = theta.head(data.p());
    fit.params.alpha = theta.tail(theta.size() - data.p());
    fit.info_matrix = info;
    // info is symmetric, so rows of terms * info^{-1} are info^{-1} term_i.
    fit.s1 = info.ldlt().solve(terms.transpose()).transpose();
    fit.converged = newton.converged;
    fit.iterations = newton.iterations;
    fit.eq_norm = newton.norm;
    return fit;
}

}  // namespace

OutcomeFit fit_outcome_mle(const Dataset& data, const Basis& basis) {
    data.validate();
    require_both_responses(data);
    const Eigen::MatrixXd w = outcome_design(data, basis);
    require_full_rank(w, "outcome MLE");
    const LogisticResult res = logistic_mle(w, data.y, "outcome MLE");
    return package(data, res.theta, FitMethod::MLE, res.info, res.scores, res.newton);
}

namespace {

void check_calibrated_weights(const Eigen::VectorXi& y, const Eigen::VectorXd& eta) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (y(i) == 1 && expit(eta(i)) < kMinCalibratedPi) {
            throw ConvergenceError("calibrated outcome fit: weight y/pi diverges at row " +
                                   std::to_string(i));
        }
    }
}

}  // namespace

OutcomeFit fit_outcome_calibrated(const Dataset& data, const Basis& basis) {
    const OutcomeFit start = fit_outcome_mle(data, basis);
    const Eigen::MatrixXd w = outcome_design(data, basis);
    const double n = static_cast<double>(data.n());
    const Eigen::VectorXi& y = data.y;

    // n^{-1} sum {y exp(-eta) - (1 - y)} w = n^{-1} sum (y / pi - 1) w.
    const detail::EquationSystem system = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& F,
                                              Eigen::MatrixXd* J) {
        const Eigen::VectorXd eta = w * theta;
        Eigen::VectorXd resid(eta.size());
        Eigen::VectorXd weight(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            weight(i) = y(i) == 1 ? std::exp(-eta(i)) : 0.0;
            resid(i) = zeta0_from_eta(y(i), eta(i));
        }
        F = w.transpose() * resid / n;
        if (J) *J = -(w.transpose() * weight.asDiagonal() * w) / n;
    };
    Eigen::VectorXd theta0(w.cols());
    theta0 << start.params.beta, start.params.alpha;
    check_calibrated_weights(y, w * theta0);
    const detail::NewtonResult newton = detail::newton_solve(system, theta0);
    if (!newton.converged) {
        throw ConvergenceError("calibrated outcome fit did not converge in " +
                               std::to_string(newton.iterations) + " iterations");
    }
    const Eigen::VectorXd eta = w * newton.theta;
    Eigen::MatrixXd terms(w.rows(), w.cols());
    Eigen::VectorXd weight(eta.size());
    check_calibrated_weights(y, eta);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        weight(i) = y(i) == 1 ? std::exp(-eta(i)) : 0.0;
        terms.row(i) = zeta0_from_eta(y(i), eta(i)) * w.row(i);
    }
    const Eigen::MatrixXd info = (w.transpose() * weight.asDiagonal() * w) / n;
    return package(data, newton.theta, FitMethod::Calibrated, info, terms, newton);
}

double outcome_equation_norm(const Dataset& data, const Basis& basis,
                             const OutcomeModelParams& params, FitMethod method) {
    const Eigen::MatrixXd w = outcome_design(data, basis);
    Eigen::VectorXd theta(w.cols());
    theta << params.beta, params.alpha;
    const Eigen::VectorXd eta = w * theta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        resid(i) = method == FitMethod::MLE ? response_residual(data.y(i), eta(i))
                                            : zeta0_from_eta(data.y(i), eta(i));
    }
    return detail::max_norm(w.transpose() * resid / static_cast<double>(data.n()));
}

CovariateFit fit_covariate(const Dataset& data, const Basis& basis,
                           const std::vector<Family>& families, Side side) {
    data.validate();
    const Eigen::Index p = data.p();
    const Eigen::Index m = basis.dim();
    if (static_cast<Eigen::Index>(families.size()) != p) {
        throw std::invalid_argument("covariate fit: need one family per Z component (" +
                                    std::to_string(p) + "), got " + std::to_string(families.size()));
    }
    const int target = side == Side::Y0 ? 0 : 1;
    const std::string what = "covariate fit on Y = " + std::to_string(target) + " rows";

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.y(i) == target) rows.push_back(i);
    }
    const auto n_sub = static_cast<Eigen::Index>(rows.size());
    const Eigen::MatrixXd b_all = basis.design(data.x);
    Eigen::MatrixXd b_sub(n_sub, m);
    for (Eigen::Index r = 0; r < n_sub; ++r) b_sub.row(r) = b_all.row(rows[static_cast<size_t>(r)]);
    require_full_rank(b_sub, what);

    CovariateFit fit;
    fit.side = side;
    fit.subsample_size = static_cast<int>(n_sub);
    fit.params.families = families;
    fit.params.gamma = Eigen::MatrixXd::Zero(p, m);
    fit.params.resid_var = Eigen::VectorXd::Zero(p);
    fit.s2 = Eigen::MatrixXd::Zero(data.n(), p * m);
    fit.converged = true;

    const double n = static_cast<double>(data.n());
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd z_sub(n_sub);
        for (Eigen::Index r = 0; r < n_sub; ++r) z_sub(r) = data.z(rows[static_cast<size_t>(r)], j);

        Eigen::VectorXd coef;
        Eigen::VectorXd resid;
        Eigen::MatrixXd normal;  // sum over the subsample of the per-row information
        if (families[static_cast<size_t>(j)] == Family::Gaussian) {
            coef = b_sub.colPivHouseholderQr().solve(z_sub);
            resid = z_sub - b_sub * coef;
            normal = b_sub.transpose() * b_sub;
            fit.params.resid_var(j) = resid.squaredNorm() / static_cast<double>(n_sub);
            if (!(fit.params.resid_var(j) > 0.0)) {
                throw SingularMatrixError(what + ": Gaussian component " + std::to_string(j + 1) +
                                          " has zero residual variance");
            }
        } else {
            for (Eigen::Index i = 0; i < data.n(); ++i) {
                if (data.z(i, j) != 0.0 && data.z(i, j) != 1.0) {
                    throw std::invalid_argument("Bernoulli component z" + std::to_string(j + 1) +
                                                " has a non-binary value at row " + std::to_string(i));
                }
            }
            const LogisticResult res = logistic_mle(b_sub, z_sub.cast<int>(),
                                                    what + ", component z" + std::to_string(j + 1));
            coef = res.theta;
            resid = res.scores.col(0);  // the intercept column holds z - f
            normal = res.info * static_cast<double>(n_sub);
        }
        fit.params.gamma.row(j) = coef.transpose();
        fit.eq_norm = std::max(
            fit.eq_norm, detail::max_norm(b_sub.transpose() * resid / static_cast<double>(n_sub)));

        const Eigen::LDLT<Eigen::MatrixXd> normal_ldlt(normal);
        for (Eigen::Index r = 0; r < n_sub; ++r) {
            const Eigen::Index i = rows[static_cast<size_t>(r)];
            fit.s2.block(i, j * m, 1, m) =
                (n * normal_ldlt.solve(b_sub.row(r).transpose() * resid(r))).transpose();
        }
    }
    fit.converged = fit.eq_norm <= 1e-10;
    return fit;
}

CovariateFit fit_covariate(const Dataset& data, const Basis& basis,
                           const std::vector<Family>& families) {
    return fit_covariate(data, basis, families, Side::Y0);
}

CovariateFit fit_covariate_y1(const Dataset& data, const Basis& basis,
                              const std::vector<Family>& families) {
    return fit_covariate(data, basis, families, Side::Y1);
}

}  // namespace drlogit
