#include "drlogit/estimators.hpp"

#include "drlogit/errors.hpp"
#include "newton.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace drlogit {

namespace {

// d zeta / d eta for the chosen side.
double zeta_slope(Side side, int y, double eta) {
    if (side == Side::Y0) return y == 1 ? -std::exp(-eta) : 0.0;
    return y == 1 ? 0.0 : -std::exp(eta);
}

void check_inputs(const Dataset& data, const OutcomeFit& outcome, const CovariateFit& covar,
                  const Basis& basis, Side side) {
    data.validate();
    if (data.count(0) == 0 || data.count(1) == 0) {
        throw std::invalid_argument("estimating beta needs both y = 0 and y = 1 rows");
    }
    if (!outcome.converged) throw std::invalid_argument("outcome fit did not converge");
    if (!covar.converged) throw std::invalid_argument("covariate fit did not converge");
    if (covar.side != side) {
        throw std::invalid_argument(side == Side::Y0
                                        ? "Y = 0 estimator needs a covariate fit on the Y = 0 rows"
                                        : "Y = 1 estimator needs a covariate fit on the Y = 1 rows");
    }
    if (outcome.params.beta.size() != data.p() || outcome.params.alpha.size() != basis.dim() ||
        covar.params.p() != data.p() || covar.params.m() != basis.dim()) {
        throw std::invalid_argument("dimension mismatch between data, basis and fits");
    }
}

EstimateReport make_report(const Eigen::VectorXd& beta, InfluenceExpansion expansion,
                           const SolveDiagnostics& diag, const PhiSpec& phi, Side side,
                           double level) {
    EstimateReport rep;
    rep.beta_hat = beta;
    rep.covariance = std::move(expansion.covariance);
    rep.std_errors = rep.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    rep.level = level;
    const double crit = normal_critical_value(level);
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
        rep.wald_ci.emplace_back(beta(k) - crit * rep.std_errors(k), beta(k) + crit * rep.std_errors(k));
    }
    rep.influence = std::move(expansion.influence);
    rep.diagnostics = diag;
    rep.phi_used = phi;
    rep.side = side;
    return rep;
}

// Newton from start, then from zero if that fails.
BetaSolution solve_with_restart(const detail::EquationSystem& system, const Eigen::VectorXd& start) {
    BetaSolution sol;
    auto attempt = [&](const Eigen::VectorXd& from) -> bool {
        try {
            const detail::NewtonResult res = detail::newton_solve(system, from);
            sol.beta = res.theta;
            sol.diagnostics.iterations += res.iterations;
            sol.diagnostics.step_halvings += res.halvings;
            sol.diagnostics.final_eq_norm = res.norm;
            sol.diagnostics.jacobian_condition = res.condition;
            sol.diagnostics.converged = res.converged;
            return res.converged;
        } catch (const SingularMatrixError&) {
            return false;
        } catch (const std::domain_error&) {
            return false;
        }
    };
    if (attempt(start)) return sol;
    sol.diagnostics.restarted = true;
    if (attempt(Eigen::VectorXd::Zero(start.size()))) return sol;
    throw ConvergenceError("beta solve did not converge (final equation norm " +
                           std::to_string(sol.diagnostics.final_eq_norm) + ")");
}

EstimateReport solve_side(const Dataset& data, const OutcomeFit& outcome, const CovariateFit& covar,
                          const PhiSpec& phi, const Basis& basis, double level, Side side) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must be in (0, 1)");
    check_inputs(data, outcome, covar, basis, side);
    const EstimatingSystem sys(data, outcome, covar, phi, basis, side);
    const detail::EquationSystem system = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& F,
                                              Eigen::MatrixXd* J) {
        F = sys.mean_r(beta);
        if (J) *J = sys.jacobian(beta);
    };
    const BetaSolution sol = solve_with_restart(system, outcome.params.beta);
    return make_report(sol.beta, sys.expand(sol.beta, outcome, covar), sol.diagnostics, phi, side,
                       level);
}

}  // namespace

// ------------------------------------------------------------ EstimatingSystem

EstimatingSystem::EstimatingSystem(const Dataset& data, const OutcomeFit& outcome,
                                   const CovariateFit& covar, const PhiSpec& phi,
                                   const Basis& basis, Side side)
    : side_(side), y_(data.y), z_(data.z), b_(basis.design(data.x)) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    g_ = b_ * outcome.params.alpha;
    resid_.resize(n, p);
    slope_.resize(n, p);
    phi_.reserve(static_cast<size_t>(n));
    GaussHermiteRule rule;
    if (phi.variant == PhiVariant::Optimal) {
        phi.validate();
        rule = gauss_hermite(phi.quadrature_order);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd bx = b_.row(i).transpose();
        resid_.row(i) = (z_.row(i).transpose() - covar.params.mean(bx)).transpose();
        slope_.row(i) = covar.params.mean_slope(bx).transpose();
        phi_.push_back(
            phi_eval(phi, data.x.row(i).transpose(), outcome.params, covar.params, basis, side, rule)
                .matrix);
    }
}

Eigen::MatrixXd EstimatingSystem::r_values(const Eigen::VectorXd& beta) const {
    Eigen::MatrixXd r(n(), p());
    for (Eigen::Index i = 0; i < n(); ++i) {
        const double eta = z_.row(i).dot(beta) + g_(i);
        r.row(i) = (zeta_from_eta(side_, y_(i), eta) * (phi(i) * resid_.row(i).transpose())).transpose();
    }
    return r;
}

Eigen::VectorXd EstimatingSystem::mean_r(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p());
    for (Eigen::Index i = 0; i < n(); ++i) {
        const double eta = z_.row(i).dot(beta) + g_(i);
        acc += zeta_from_eta(side_, y_(i), eta) * (phi(i) * resid_.row(i).transpose());
    }
    return acc / static_cast<double>(n());
}

Eigen::MatrixXd EstimatingSystem::jacobian(const Eigen::VectorXd& beta) const {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p(), p());
    for (Eigen::Index i = 0; i < n(); ++i) {
        const double eta = z_.row(i).dot(beta) + g_(i);
        const double s = zeta_slope(side_, y_(i), eta);
        if (s == 0.0) continue;
        acc += s * (phi(i) * resid_.row(i).transpose()) * z_.row(i);
    }
    return acc / static_cast<double>(n());
}

InfluenceExpansion EstimatingSystem::expand(const Eigen::VectorXd& beta, const OutcomeFit& outcome,
                                            const CovariateFit& covar) const {
    const Eigen::Index m = b_.cols();
    const double nn = static_cast<double>(n());
    InfluenceExpansion out;
    out.H = jacobian(beta);
    out.B1 = Eigen::MatrixXd::Zero(p(), m);
    out.B2 = Eigen::MatrixXd::Zero(p(), p() * m);
    for (Eigen::Index i = 0; i < n(); ++i) {
        const double eta = z_.row(i).dot(beta) + g_(i);
        const double zeta = zeta_from_eta(side_, y_(i), eta);
        const double s = zeta_slope(side_, y_(i), eta);
        if (s != 0.0) out.B1 += s * (phi(i) * resid_.row(i).transpose()) * b_.row(i);
        // d r / d gamma_jk = -zeta phi[:, j] slope_j b_k
        for (Eigen::Index j = 0; j < p(); ++j) {
            out.B2.middleCols(j * m, m) -= (zeta * slope_(i, j)) * phi(i).col(j) * b_.row(i);
        }
    }
    out.B1 /= nn;
    out.B2 /= nn;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(out.H);
    if (!lu.isInvertible() || detail::condition_number(out.H) > 1e12) {
        throw SingularMatrixError("influence expansion: H is singular");
    }
    const Eigen::MatrixXd s1_alpha = outcome.s1.rightCols(m);
    const Eigen::MatrixXd terms = r_values(beta) + s1_alpha * out.B1.transpose() +
                                  covar.s2 * out.B2.transpose();
    // psi_i = -H^{-1} terms_i, stored as rows.
    out.influence = -lu.solve(terms.transpose()).transpose();
    out.covariance = out.influence.transpose() * out.influence / (nn * nn);
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

// ------------------------------------------------------------ public API

EstimateReport solve_beta(const Dataset& data, const OutcomeFit& outcome, const CovariateFit& covar,
                          const PhiSpec& phi, const Basis& basis, double level) {
    return solve_side(data, outcome, covar, phi, basis, level, Side::Y0);
}

EstimateReport solve_beta_y1(const Dataset& data, const OutcomeFit& outcome,
                             const CovariateFit& covar1, const PhiSpec& phi, const Basis& basis,
                             double level) {
    return solve_side(data, outcome, covar1, phi, basis, level, Side::Y1);
}

InfluenceExpansion influence_assemble(const Dataset& data, const Eigen::VectorXd& beta_hat,
                                      const OutcomeFit& outcome, const CovariateFit& covar,
                                      const PhiSpec& phi, const Basis& basis, Side side) {
    check_inputs(data, outcome, covar, basis, side);
    return EstimatingSystem(data, outcome, covar, phi, basis, side).expand(beta_hat, outcome, covar);
}

double closed_form_binary(const Dataset& data, const OutcomeFit& outcome, const CovariateFit& covar,
                          const Basis& basis) {
    check_inputs(data, outcome, covar, basis, Side::Y0);
    if (data.p() != 1) throw std::invalid_argument("closed form needs a scalar Z");
    // Sample sum of exp(-beta z y) [y - e] (z - f) is exp(-beta) B - A.
    double a = 0.0;
    double b = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const double z = data.z(i, 0);
        if (z != 0.0 && z != 1.0) throw std::invalid_argument("closed form needs a binary Z");
        const Eigen::VectorXd bx = basis.eval(data.x.row(i).transpose());
        const double e = expit(outcome.params.alpha.dot(bx));
        const double f = covar.params.mean(bx)(0);
        if (data.y(i) == 0) {
            a += e * (z - f);
        } else if (z == 0.0) {
            a += (1.0 - e) * f;
        } else {
            b += (1.0 - e) * (1.0 - f);
        }
    }
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("closed form has no finite root (A = " + std::to_string(a) +
                                ", B = " + std::to_string(b) + ")");
    }
    return -std::log(a / b);
}

BetaSolution solve_beta_instrument(const Dataset& data, const OutcomeFit& outcome,
                                   const CovariateFit& covar, const Instrument& u,
                                   const Basis& basis) {
    check_inputs(data, outcome, covar, basis, Side::Y0);
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const Eigen::MatrixXd b = basis.design(data.x);
    const Eigen::VectorXd g = b * outcome.params.alpha;

    // u(z_i, x_i) - E[u | Y = 0, x_i], fixed during the beta iteration.
    Eigen::MatrixXd centered(n, p);
    if (const auto* spec = std::get_if<PhiSpec>(&u)) {
        const EstimatingSystem sys(data, outcome, covar, *spec, basis, Side::Y0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd bx = b.row(i).transpose();
            centered.row(i) =
                (sys.phi(i) * (data.z.row(i).transpose() - covar.params.mean(bx))).transpose();
        }
    } else {
        const auto& fn = std::get<InstrumentFn>(u);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd z = data.z.row(i).transpose();
            const Eigen::VectorXd x = data.x.row(i).transpose();
            const Eigen::VectorXd ui = fn(z, x);
            if (ui.size() != p) throw std::invalid_argument("instrument must return a p-vector");
            centered.row(i) = (ui - instrument_conditional_mean(fn, x, covar.params, basis)).transpose();
        }
    }

    const detail::EquationSystem system = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& F,
                                              Eigen::MatrixXd* J) {
        F = Eigen::VectorXd::Zero(p);
        if (J) *J = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double eta = data.z.row(i).dot(beta) + g(i);
            const double resid = (data.y(i) == 1 ? expit(-eta) : -expit(eta)) / expit(eta);
            F += resid * centered.row(i).transpose();
            if (J && data.y(i) == 1) *J -= std::exp(-eta) * centered.row(i).transpose() * data.z.row(i);
        }
        F /= static_cast<double>(n);
        if (J) *J /= static_cast<double>(n);
    };
    return solve_with_restart(system, outcome.params.beta);
}

std::vector<EfficiencyRow> efficiency_compare(std::span<const NamedVariance> entries) {
    std::vector<EfficiencyRow> rows;
    if (entries.empty()) return rows;
    double best = entries.front().variance;
    for (const auto& e : entries) best = std::min(best, e.variance);
    for (const auto& e : entries) {
        rows.push_back({e.name, e.variance, e.variance / entries.front().variance, e.variance / best});
    }
    return rows;
}

std::vector<EfficiencyRow> efficiency_compare(
    std::span<const std::pair<std::string, EstimateReport>> reports, Eigen::Index component) {
    std::vector<NamedVariance> entries;
    for (const auto& [name, rep] : reports) {
        entries.push_back({name, rep.covariance(component, component)});
    }
    return efficiency_compare(entries);
}

double normal_critical_value(double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must be in (0, 1)");
    const boost::math::normal standard;
    return boost::math::quantile(standard, 0.5 + 0.5 * level);
}

}  // namespace drlogit
