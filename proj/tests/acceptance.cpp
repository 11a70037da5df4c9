// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "drlogit/estimators.hpp"
#include "drlogit/finite_law.hpp"
#include "drlogit/model_core.hpp"
#include "drlogit/nuisance.hpp"
#include "drlogit/quadrature.hpp"
#include "drlogit/report_io.hpp"
#include "drlogit/sim_harness.hpp"
#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace drlogit;
using testsupport::vec;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, double seconds) {
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << id << ": " << what << " | " << detail
              << " | " << std::fixed << std::setprecision(1) << seconds << " s" << std::endl;
    std::cout.unsetf(std::ios::fixed);
}

std::string sci(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << std::scientific << v;
    return s.str();
}

std::string fix(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const PhiSpec kPhis[] = {PhiSpec{PhiVariant::Identity}, PhiSpec{PhiVariant::Simple}, PhiSpec{PhiVariant::Optimal}};

void criterion1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int law_rep = 0; law_rep < 4; ++law_rep) {
        const auto gl = testsupport::random_grid_law(rng, testsupport::uniform(rng, -1.5, 1.5));
        for (int k = 0; k < 5; ++k) {
            const Eigen::VectorXd wrong_gamma = testsupport::uniform_vec(rng, 3, -1.5, 1.5);
            const Eigen::VectorXd wrong_alpha = testsupport::uniform_vec(rng, 3, -1.5, 1.5);
            for (const auto& phi : kPhis) {
                worst = std::max(worst, std::abs(testsupport::exact_mean_r(gl, gl.alpha_star, wrong_gamma, phi)));
                worst = std::max(worst, std::abs(testsupport::exact_mean_r(gl, wrong_alpha, gl.gamma_star, phi)));
            }
        }
    }
    const double secs = since(t0);
    report(1, worst <= 1e-12 && secs < 1.0, "exact E[r] at beta* under one correct nuisance model",
           "max |E r| = " + sci(worst) + " (tol 1e-12)", secs);
}

void criterion2() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int nz = 2 + static_cast<int>(rng() % 3), nx = 1 + static_cast<int>(rng() % 4);
        std::vector<Eigen::VectorXd> zs, xs;
        for (int i = 0; i < nz; ++i) zs.push_back(vec({testsupport::uniform(rng, -2, 2)}));
        for (int i = 0; i < nx; ++i) xs.push_back(vec({double(i)}));
        Eigen::MatrixXd pz(nz, nx);
        for (int ix = 0; ix < nx; ++ix) {
            const Eigen::VectorXd w = testsupport::uniform_vec(rng, nz, 0.05, 1.0);
            pz.col(ix) = w / w.sum();
        }
        Eigen::VectorXd px = testsupport::uniform_vec(rng, nx, 0.1, 1.0);
        px /= px.sum();
        const FiniteLaw law = make_logistic_law(vec({testsupport::uniform(rng, -2, 2)}), zs, xs, px, pz,
                                                testsupport::uniform_vec(rng, nx, -2, 2));
        Eigen::MatrixXd h(nz, nx);
        for (int iz = 0; iz < nz; ++iz)
            for (int ix = 0; ix < nx; ++ix) h(iz, ix) = testsupport::uniform(rng, -3, 3);
        worst = std::max(worst, orthocomp_identity_check(h, law));
    }
    const double secs = since(t0);
    report(2, worst <= 1e-12 && secs < 1.0, "orthogonal-complement identity on 100 random finite laws",
           "max discrepancy = " + sci(worst) + " (tol 1e-12)", secs);
}

void criterion3() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(303);
    const Basis basis = Basis::linear(1);
    double triple = 0.0, tau = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const int y = static_cast<int>(rng() % 2);
        const double z = testsupport::uniform(rng, -3, 3);
        const double beta = testsupport::uniform(rng, -2, 2);
        const auto alpha = testsupport::uniform_vec(rng, 2, -2, 2);
        const auto x = testsupport::uniform_vec(rng, 1, -2, 2);
        const auto gam = testsupport::uniform_vec(rng, 2, -1, 1);
        const double g = alpha(0) + alpha(1) * x(0);
        const double f = gam(0) + gam(1) * x(0);
        const auto cv = testsupport::covar(gam.transpose(), {Family::Gaussian});
        const double r = r_eval(y, vec({z}), x, vec({beta}), alpha, cv, PhiSpec{PhiVariant::Simple}, basis)(0);
        const double form2 = (y * std::exp(-beta * z) - (1 - y) * std::exp(g)) / (1 + std::exp(g)) * (z - f);
        const double form3 = std::exp(-beta * z * y) * (y - expit(g)) * (z - f);
        triple = std::max({triple, testsupport::rel_err(r, form2), testsupport::rel_err(r, form3)});
    }
    for (int i = 0; i < 10000; ++i) {
        const int y = static_cast<int>(rng() % 2);
        const bool binary = i % 2 == 0;
        const double z = binary ? static_cast<double>(rng() % 2) : testsupport::uniform(rng, -3, 3);
        const auto beta = testsupport::uniform_vec(rng, 1, -2, 2);
        const auto alpha = testsupport::uniform_vec(rng, 2, -2, 2);
        const auto x = testsupport::uniform_vec(rng, 1, -2, 2);
        const auto cv = testsupport::covar(testsupport::uniform_vec(rng, 2, -1, 1).transpose(),
                                           {binary ? Family::Bernoulli : Family::Gaussian}, vec({0.7}));
        const PhiSpec phi = kPhis[i % 3];
        const auto r = r_eval(y, vec({z}), x, beta, alpha, cv, phi, basis);
        const auto t = tau_prime_eval(y, vec({z}), x, beta, alpha, cv, phi, basis);
        tau = std::max(tau, testsupport::rel_err(r(0), t(0)));
    }
    const double secs = since(t0);
    report(3, triple <= 1e-12 && tau <= 1e-12 && secs < 1.0, "simple-phi triple form and tau'/r equivalence",
           "max rel err triple = " + sci(triple) + ", tau' = " + sci(tau) + " (tol 1e-12)", secs);
}

void criterion4() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(404);
    const Basis basis = Basis::linear(1);
    double bern = 0.0, gauss = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto alpha = testsupport::uniform_vec(rng, 2, -2, 2);
        const auto x = testsupport::uniform_vec(rng, 1, -1.5, 1.5);
        const double e = expit(alpha(0) + alpha(1) * x(0));
        const OutcomeModelParams prm{vec({0.0}), alpha};
        const auto cb = testsupport::covar(testsupport::uniform_vec(rng, 2, -1, 1).transpose(), {Family::Bernoulli});
        bern = std::max(bern, std::abs(phi_eval(PhiSpec{PhiVariant::Optimal}, x, prm, cb, basis).matrix(0, 0) - e));
        const auto cg = testsupport::covar(testsupport::uniform_vec(rng, 2, -1, 1).transpose(), {Family::Gaussian},
                                           vec({testsupport::uniform(rng, 0.3, 2.0)}));
        gauss = std::max(gauss, std::abs(phi_eval(PhiSpec{PhiVariant::Optimal, 21}, x, prm, cg, basis).matrix(0, 0) - e));
    }
    report(4, bern <= 1e-12 && gauss <= 1e-8, "optimal phi equals expit(g) at beta* = 0",
           "Bernoulli max err = " + sci(bern) + " (tol 1e-12), Gaussian K=21 = " + sci(gauss) + " (tol 1e-8)",
           since(t0));
}

void criterion5() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(505);
    const auto rule = gauss_hermite(21);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double beta = testsupport::uniform(rng, -2, 2);
        const double m = testsupport::uniform(rng, -2, 2);
        const double s = testsupport::uniform(rng, 0.2, 1.5);
        const double q = normal_expectation(rule, m, s * s, [&](double z) { return std::exp(-beta * z); });
        worst = std::max(worst, std::abs(q - std::exp(-beta * m + 0.5 * beta * beta * s * s)));
    }
    report(5, worst <= 1e-8, "Gauss-Hermite E[exp(-beta Z)] against the closed form",
           "max abs err = " + sci(worst) + " over 100 draws (tol 1e-8)", since(t0));
}

void criterion6() {
    const auto t0 = Clock::now();
    const Basis basis = Basis::linear(2).add_square(0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const bool binary = k % 2 == 0;
        const Dataset d = testsupport::random_dataset(600 + static_cast<std::uint64_t>(k), 400, binary);
        const auto out = fit_outcome_mle(d, basis);
        const auto cf = fit_covariate(d, basis, {binary ? Family::Bernoulli : Family::Gaussian});
        const PhiSpec phi = kPhis[k % 3];
        const auto rep = solve_beta(d, out, cf, phi, basis);
        worst = std::max(worst, testsupport::derivative_errors(d, rep.beta_hat, out, cf, phi, basis).max());
    }
    report(6, worst <= 1e-6, "analytic H, B1, B2 against central differences",
           "max rel err = " + sci(worst) + " on 20 fitted configurations (tol 1e-6)", since(t0));
}

MonteCarloSummary simulate(const std::string& name, int replications) {
    RunOptions opt;
    opt.workers = workers();
    opt.replications = replications;
    return run_scenario(find_scenario(name), opt);
}

bool dr_kind(const std::string& estimator) { return estimator != "mle"; }

void criterion7() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::ostringstream detail;
    for (const std::string s : {"S1", "S2", "S3"}) {
        for (const std::string ed : {"-bin", "-gauss"}) {
            const auto sum = simulate(s + ed, 500);
            for (const auto& e : sum.estimators) {
                if (!dr_kind(e.estimator)) continue;
                const double tol = std::max(0.02, 3 * e.mcse);
                if (std::abs(e.bias) > tol) {
                    ok = false;
                    detail << s << ed << " " << e.estimator << " bias " << fix(e.bias) << " (mcse " << fix(e.mcse)
                           << ") exceeds " << fix(tol) << "; ";
                }
            }
            if (s == "S2") {
                const auto& m = sum.at("mle");
                const bool power = std::abs(m.bias) >= 5 * m.mcse;
                ok = ok && power;
                detail << s << ed << " mle |bias|/mcse = " << fix(std::abs(m.bias) / m.mcse, 2) << "; ";
            }
        }
    }
    for (const std::string ed : {"-bin", "-gauss"}) {
        const auto sum = simulate("S4" + ed, 500);
        const auto& e = sum.at("dr-simple");
        const bool biased = std::abs(e.bias) >= 5 * e.mcse;
        ok = ok && biased;
        detail << "S4" << ed << " dr-simple |bias|/mcse = " << fix(std::abs(e.bias) / e.mcse, 2) << "; ";
    }
    report(7, ok, "double robustness at n=2000, R=500 (S1-S4)", detail.str(), since(t0));
}

void criterion8() {
    const auto t0 = Clock::now();
    bool ok = true;
    double lo = 1.0, hi = 0.0;
    std::ostringstream detail;
    for (const std::string s : {"S1", "S2", "S3"}) {
        for (const std::string ed : {"-bin", "-gauss"}) {
            const auto sum = simulate(s + ed, 1000);
            for (const auto& e : sum.estimators) {
                if (!dr_kind(e.estimator)) continue;
                lo = std::min(lo, e.coverage);
                hi = std::max(hi, e.coverage);
                if (e.coverage < 0.925 || e.coverage > 0.975) {
                    ok = false;
                    detail << s << ed << " " << e.estimator << " coverage " << fix(e.coverage, 3) << "; ";
                }
            }
        }
    }
    detail << "DR coverage range [" << fix(lo, 3) << ", " << fix(hi, 3) << "] (target [0.925, 0.975])";
    report(8, ok, "Wald coverage at R=1000, n=2000 (S1-S3)", detail.str(), since(t0));
}

void criterion9() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::ostringstream detail;
    for (const std::string ed : {"-bin", "-gauss"}) {
        const auto b0 = simulate("S1b0" + ed, 500);
        const double ratio = std::pow(b0.at("dr-simple").sd / b0.at("dr-optimal").sd, 2);
        ok = ok && ratio >= 0.95 && ratio <= 1.05;
        detail << "S1b0" << ed << " Var simple/optimal = " << fix(ratio) << "; ";
        const auto b1 = simulate("S1b1" + ed, 500);
        const double vi = std::pow(b1.at("dr-identity").sd, 2);
        const double vs = std::pow(b1.at("dr-simple").sd, 2);
        const double vo = std::pow(b1.at("dr-optimal").sd, 2);
        ok = ok && vo <= 1.05 * vs && vs <= 1.05 * vi;
        detail << "S1b1" << ed << " Var opt/simple/identity = " << fix(vo, 5) << "/" << fix(vs, 5) << "/" << fix(vi, 5)
               << "; ";
    }
    report(9, ok, "efficiency ordering of phi variants (R=500)", detail.str(), since(t0));
}

void criterion10() {
    const auto t0 = Clock::now();
    const Basis basis = Basis::linear(2);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Dataset d = testsupport::random_dataset(1000 + seed, 500, true);
        const auto out = fit_outcome_mle(d, basis);
        const auto cf = fit_covariate(d, basis, {Family::Bernoulli});
        const double closed = closed_form_binary(d, out, cf, basis);
        const auto rep = solve_beta(d, out, cf, PhiSpec{PhiVariant::Simple}, basis);
        worst = std::max(worst, std::abs(rep.beta_hat(0) - closed));
    }
    report(10, worst <= 1e-8, "closed form equals the simple-phi Newton root",
           "max |diff| = " + sci(worst) + " on 50 datasets (tol 1e-8)", since(t0));
}

void criterion11() {
    const auto t0 = Clock::now();
    TrueLaw law;
    law.beta_star = vec({0.9});
    law.x_law = XLaw::grid({vec({-1.0}), vec({0.0}), vec({1.0})}, vec({0.3, 0.5, 0.2}));
    law.true_basis = Basis::linear(1).add_square(0);
    law.g_coef = vec({-0.3, 0.8, 0.5});
    law.f_coef = vec({0.2, -0.6, 0.4}).transpose();
    law.families = {Family::Bernoulli};
    law.sigma2 = vec({1.0});
    const int n = 1000000;
    const Dataset d = sample(law, n, 1111);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4, 3);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        counts(2 * d.y(i) + static_cast<int>(d.z(i, 0)), std::lround(d.x(i, 0)) + 1) += 1;
    }
    const double px[3] = {0.3, 0.5, 0.2};
    double worst_z = 0.0;
    for (int ix = 0; ix < 3; ++ix) {
        const double x = ix - 1.0;
        const double e = expit(-0.3 + 0.8 * x + 0.5 * x * x);
        const double f = expit(0.2 - 0.6 * x + 0.4 * x * x);
        double w[2][2], tot = 0;
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z) tot += w[y][z] = std::exp(0.9 * y * z) * (z ? f : 1 - f) * (y ? e : 1 - e);
        for (int y = 0; y < 2; ++y) {
            for (int z = 0; z < 2; ++z) {
                const double p = px[ix] * w[y][z] / tot;
                worst_z = std::max(worst_z, std::abs(counts(2 * y + z, ix) / n - p) / std::sqrt(p * (1 - p) / n));
            }
        }
    }
    std::mt19937_64 rng(1112);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double worst_c = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const double beta = testsupport::uniform(rng, -2, 2), m = testsupport::uniform(rng, -1.5, 1.5);
        const double s2 = testsupport::uniform(rng, 0.2, 2.0), g = testsupport::uniform(rng, -2, 2);
        const double sd = std::sqrt(s2), e = expit(g);
        const auto dens = [&](double z) { return std::exp(-0.5 * (z - m) * (z - m) / s2) / (sd * std::sqrt(2 * M_PI)); };
        const double c = GK::integrate([&](double z) { return dens(z) * ((1 - e) + e * std::exp(beta * z)); },
                                       m - 40 * sd, m + 40 * sd, 15, 1e-14);
        const TiltTerms t = gaussian_tilt(vec({beta}), vec({m}), vec({s2}), g);
        worst_c = std::max(worst_c, std::abs(std::exp(t.log_normalizer) - c));
    }
    report(11, worst_z <= 4.0 && worst_c <= 1e-8, "sampler exactness",
           "max cell |z| = " + fix(worst_z, 2) + " at 1e6 draws (tol 4), tilt normalizer err = " + sci(worst_c) +
               " (tol 1e-8)",
           since(t0));
}

void criterion12() {
    const auto t0 = Clock::now();
    RunOptions opt;
    opt.replications = 100;
    std::vector<std::string> dumps;
    for (int w : {1, 2, 4, 1}) {
        opt.workers = w;
        dumps.push_back(to_json({run_scenario(find_scenario("S2-gauss"), opt)}).dump(2));
        dumps.push_back(to_json({run_scenario(find_scenario("S3-bin"), opt)}).dump(2));
    }
    bool ok = true;
    for (size_t i = 2; i < dumps.size(); ++i) ok = ok && dumps[i] == dumps[i % 2];
    report(12, ok, "byte-identical JSON reports across repeats and worker counts",
           "S2-gauss and S3-bin, R=100, workers 1/2/4/1", since(t0));
}

}  // namespace

int main() {
    std::cout << "drlogit acceptance suite (" << workers() << " worker threads)" << std::endl;
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    criterion11();
    criterion12();
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
