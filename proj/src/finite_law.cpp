#include "drlogit/finite_law.hpp"

#include "drlogit/model_core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace drlogit {

double FiniteLaw::pi(Eigen::Index iz, Eigen::Index ix) const {
    const double p0 = prob[0](iz, ix);
    const double p1 = prob[1](iz, ix);
    return p1 / (p0 + p1);
}

void FiniteLaw::validate() const {
    for (int y = 0; y < 2; ++y) {
        if (prob[static_cast<size_t>(y)].rows() != nz() || prob[static_cast<size_t>(y)].cols() != nx()) {
            throw std::invalid_argument("finite law: probability table shape does not match supports");
        }
        if ((prob[static_cast<size_t>(y)].array() < 0.0).any()) {
            throw std::invalid_argument("finite law: negative cell probability");
        }
    }
    if (std::abs(total() - 1.0) > 1e-10) {
        throw std::invalid_argument("finite law: probabilities sum to " + std::to_string(total()) +
                                    ", not 1");
    }
}

Eigen::VectorXd FiniteLaw::expectation(
    const std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>& fn)
    const {
    Eigen::VectorXd acc;
    for (int y = 0; y < 2; ++y) {
        for (Eigen::Index ix = 0; ix < nx(); ++ix) {
            for (Eigen::Index iz = 0; iz < nz(); ++iz) {
                const double w = prob[static_cast<size_t>(y)](iz, ix);
                if (w == 0.0) continue;
                const Eigen::VectorXd v = fn(y, z_support[static_cast<size_t>(iz)],
                                             x_support[static_cast<size_t>(ix)]);
                if (acc.size() == 0) acc = Eigen::VectorXd::Zero(v.size());
                acc += w * v;
            }
        }
    }
    return acc;
}

FiniteLaw make_logistic_law(const Eigen::VectorXd& beta, std::vector<Eigen::VectorXd> z_support,
                            std::vector<Eigen::VectorXd> x_support,
                            const Eigen::VectorXd& x_probs, const Eigen::MatrixXd& pz_given_y0,
                            const Eigen::VectorXd& g_star) {
    FiniteLaw law;
    law.z_support = std::move(z_support);
    law.x_support = std::move(x_support);
    const Eigen::Index nz = law.nz();
    const Eigen::Index nx = law.nx();
    if (x_probs.size() != nx || g_star.size() != nx || pz_given_y0.rows() != nz ||
        pz_given_y0.cols() != nx) {
        throw std::invalid_argument("make_logistic_law: shape mismatch");
    }
    law.prob[0] = Eigen::MatrixXd::Zero(nz, nx);
    law.prob[1] = Eigen::MatrixXd::Zero(nz, nx);
    for (Eigen::Index ix = 0; ix < nx; ++ix) {
        const double e = expit(g_star(ix));
        double c = 0.0;
        for (Eigen::Index iz = 0; iz < nz; ++iz) {
            const double tilt = std::exp(beta.dot(law.z_support[static_cast<size_t>(iz)]));
            law.prob[0](iz, ix) = pz_given_y0(iz, ix) * (1.0 - e);
            law.prob[1](iz, ix) = tilt * pz_given_y0(iz, ix) * e;
            c += law.prob[0](iz, ix) + law.prob[1](iz, ix);
        }
        law.prob[0].col(ix) *= x_probs(ix) / c;
        law.prob[1].col(ix) *= x_probs(ix) / c;
    }
    return law;
}

double orthocomp_identity_check(const Eigen::MatrixXd& h, const FiniteLaw& law) {
    law.validate();
    if (h.rows() != law.nz() || h.cols() != law.nx()) {
        throw std::invalid_argument("orthocomp check: h must be tabulated on the law's (z, x) grid");
    }
    double worst = 0.0;
    for (Eigen::Index ix = 0; ix < law.nx(); ++ix) {
        const double px = law.prob[0].col(ix).sum() + law.prob[1].col(ix).sum();
        if (px == 0.0) continue;
        const double p0x = law.prob[0].col(ix).sum();
        if (p0x == 0.0) {
            throw std::invalid_argument("orthocomp check: P(Y = 0 | X) = 0 at support point " +
                                        std::to_string(ix));
        }
        double lhs = 0.0;
        double inner = 0.0;
        for (Eigen::Index iz = 0; iz < law.nz(); ++iz) {
            const double pzx = law.prob[0](iz, ix) + law.prob[1](iz, ix);
            if (pzx == 0.0) continue;
            if (law.prob[0](iz, ix) == 0.0 || law.prob[1](iz, ix) == 0.0) {
                throw std::invalid_argument("orthocomp check: P(Y = 1 | Z, X) must lie in (0, 1)");
            }
            const double pi = law.pi(iz, ix);
            lhs += (pzx / px) * h(iz, ix) * pi * (1.0 - pi);
            inner += (law.prob[0](iz, ix) / p0x) * h(iz, ix) * pi;
        }
        const double rhs = (p0x / px) * inner;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace drlogit
