#include "newton.hpp"

#include "drlogit/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace drlogit::detail {

double max_norm(const Eigen::VectorXd& v) {
    if (!v.allFinite()) return std::numeric_limits<double>::infinity();
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double condition_number(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    const double lo = sv(sv.size() - 1);
    return lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

NewtonResult newton_solve(const EquationSystem& system, Eigen::VectorXd theta0,
                          const NewtonOptions& options) {
    NewtonResult res;
    res.theta = std::move(theta0);
    Eigen::VectorXd F;
    Eigen::MatrixXd J;
    system(res.theta, F, &J);
    res.norm = max_norm(F);
    if (!std::isfinite(res.norm)) {
        throw std::domain_error("Newton: equations are not finite at the starting point");
    }

    Eigen::VectorXd F_try;
    while (res.iterations < options.max_iterations && res.norm > options.target) {
        ++res.iterations;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
        if (!J.allFinite() || qr.rank() < J.cols()) {
            throw SingularMatrixError("Newton: singular Jacobian");
        }
        const Eigen::VectorXd step = qr.solve(-F);

        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h) {
            const Eigen::VectorXd trial = res.theta + t * step;
            system(trial, F_try, nullptr);
            const double trial_norm = max_norm(F_try);
            if (trial_norm < res.norm) {
                res.theta = trial;
                res.norm = trial_norm;
                accepted = true;
                break;
            }
            t *= 0.5;
            ++res.halvings;
        }
        if (!accepted) break;
        system(res.theta, F, &J);
    }
    res.converged = res.norm <= options.tolerance;
    res.condition = condition_number(J);
    return res;
}

}  // namespace drlogit::detail
