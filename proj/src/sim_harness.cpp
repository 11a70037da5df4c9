#include "drlogit/sim_harness.hpp"

#include "drlogit/errors.hpp"
#include "drlogit/estimators.hpp"
#include "drlogit/model_core.hpp"
#include "drlogit/nuisance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>

namespace drlogit {

namespace {

constexpr double kMinCell = 1e-300;
constexpr double kMaxTiltExponent = 700.0;
constexpr double kMaxFailureShare = 0.2;

double log_sum_exp(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

bool coefficients_expressible(const Basis& truth, const Eigen::VectorXd& coef, const Basis& working) {
    for (int t = 0; t < truth.dim(); ++t) {
        if (coef(t) != 0.0 && working.index_of(truth.terms()[static_cast<size_t>(t)]) < 0) return false;
    }
    return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

// ------------------------------------------------------------------ laws

XLaw XLaw::grid(std::vector<Eigen::VectorXd> points, Eigen::VectorXd probs) {
    if (points.empty() || static_cast<Eigen::Index>(points.size()) != probs.size()) {
        throw std::invalid_argument("grid X law: one probability per point required");
    }
    if ((probs.array() < 0.0).any() || std::abs(probs.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("grid X law: probabilities must be non-negative and sum to 1");
    }
    XLaw law;
    law.kind = Kind::Grid;
    law.q = static_cast<int>(points.front().size());
    law.points = std::move(points);
    law.probs = std::move(probs);
    return law;
}

XLaw XLaw::uniform(int q, double lo, double hi) {
    if (q < 1 || !(hi > lo)) throw std::invalid_argument("uniform X law: need q >= 1 and hi > lo");
    XLaw law;
    law.kind = Kind::Uniform;
    law.q = q;
    law.lo = lo;
    law.hi = hi;
    return law;
}

int XLaw::dim() const { return q; }

Eigen::VectorXd XLaw::draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (kind == Kind::Uniform) {
        Eigen::VectorXd x(q);
        for (int j = 0; j < q; ++j) x(j) = lo + (hi - lo) * unif(rng);
        return x;
    }
    const double u = unif(rng);
    double acc = 0.0;
    for (size_t k = 0; k < points.size(); ++k) {
        acc += probs(static_cast<Eigen::Index>(k));
        if (u < acc) return points[k];
    }
    return points.back();
}

double TrueLaw::g_star(const Eigen::VectorXd& x) const { return g_coef.dot(true_basis.eval(x)); }

Eigen::VectorXd TrueLaw::f0_star(const Eigen::VectorXd& x) const {
    Eigen::VectorXd f = f_coef * true_basis.eval(x);
    for (int j = 0; j < p(); ++j) {
        if (families[static_cast<size_t>(j)] == Family::Bernoulli) f(j) = expit(f(j));
    }
    return f;
}

void TrueLaw::validate() const {
    if (g_coef.size() != true_basis.dim() || f_coef.rows() != p() || f_coef.cols() != true_basis.dim() ||
        static_cast<int>(families.size()) != p() || sigma2.size() != p()) {
        throw std::invalid_argument("true law: inconsistent dimensions");
    }
    if (true_basis.max_coordinate() >= x_law.dim()) {
        throw std::invalid_argument("true law: basis references a coordinate outside X");
    }
    for (int j = 0; j < p(); ++j) {
        if (families[static_cast<size_t>(j)] == Family::Gaussian && !(sigma2(j) > 0.0)) {
            throw std::invalid_argument("true law: Gaussian components need sigma2 > 0");
        }
    }
}

TiltTerms gaussian_tilt(const Eigen::VectorXd& beta, const Eigen::VectorXd& mean,
                        const Eigen::VectorXd& sigma2, double g) {
    const double shift = beta.dot(mean);
    if (std::abs(shift) > kMaxTiltExponent) {
        throw std::overflow_error("Gaussian tilt exponent beta'm = " + std::to_string(shift) +
                                  " overflows");
    }
    // log of e * E[exp(beta'Z)] under Z ~ N(m, diag(sigma2)).
    const double log_tilted = std::log(expit(g)) + shift + 0.5 * beta.cwiseAbs2().dot(sigma2);
    TiltTerms out;
    out.log_normalizer = log_sum_exp(std::log(expit(-g)), log_tilted);
    out.p_y1 = std::exp(log_tilted - out.log_normalizer);
    return out;
}

std::array<std::array<double, 2>, 2> binary_cells(double beta, double f0, double g) {
    const double log_e1 = std::log(expit(g));
    const double log_e0 = std::log(expit(-g));
    const double log_f1 = std::log(f0);
    const double log_f0 = std::log1p(-f0);
    const double l00 = log_e0 + log_f0;
    const double l01 = log_e0 + log_f1;
    const double l10 = log_e1 + log_f0;
    const double l11 = log_e1 + log_f1 + beta;
    const double log_c = log_sum_exp(log_sum_exp(l00, l01), log_sum_exp(l10, l11));
    return {{{std::exp(l00 - log_c), std::exp(l01 - log_c)},
             {std::exp(l10 - log_c), std::exp(l11 - log_c)}}};
}

Dataset sample_binary(const TrueLaw& law, int n, std::uint64_t seed) {
    law.validate();
    if (law.p() != 1 || law.families.front() != Family::Bernoulli) {
        throw std::invalid_argument("sample_binary needs a scalar Bernoulli Z");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Dataset data;
    data.y.resize(n);
    data.z.resize(n, 1);
    data.x.resize(n, law.x_law.dim());
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = law.x_law.draw(rng);
        const auto cells = binary_cells(law.beta_star(0), law.f0_star(x)(0), law.g_star(x));
        for (const auto& row : cells) {
            for (double c : row) {
                if (!(c >= kMinCell)) throw std::underflow_error("sample_binary: cell probability underflow");
            }
        }
        const double u = unif(rng);
        int y = 1;
        int z = 1;
        if (u < cells[0][0]) {
            y = 0, z = 0;
        } else if (u < cells[0][0] + cells[0][1]) {
            y = 0, z = 1;
        } else if (u < cells[0][0] + cells[0][1] + cells[1][0]) {
            y = 1, z = 0;
        }
        data.y(i) = y;
        data.z(i, 0) = z;
        data.x.row(i) = x.transpose();
    }
    return data;
}

Dataset sample_gaussian_tilted(const TrueLaw& law, int n, std::uint64_t seed) {
    law.validate();
    for (auto fam : law.families) {
        if (fam != Family::Gaussian) throw std::invalid_argument("sample_gaussian_tilted needs Gaussian Z");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int p = law.p();
    const Eigen::VectorXd sd = law.sigma2.cwiseSqrt();
    const Eigen::VectorXd shift = law.sigma2.cwiseProduct(law.beta_star);
    Dataset data;
    data.y.resize(n);
    data.z.resize(n, p);
    data.x.resize(n, law.x_law.dim());
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = law.x_law.draw(rng);
        const Eigen::VectorXd m = law.f0_star(x);
        const TiltTerms tilt = gaussian_tilt(law.beta_star, m, law.sigma2, law.g_star(x));
        const int y = unif(rng) < tilt.p_y1 ? 1 : 0;
        // Z | Y = 1, X is the Y = 0 normal shifted by diag(sigma2) beta*.
        for (int j = 0; j < p; ++j) data.z(i, j) = m(j) + (y == 1 ? shift(j) : 0.0) + sd(j) * normal(rng);
        data.y(i) = y;
        data.x.row(i) = x.transpose();
    }
    return data;
}

Dataset sample(const TrueLaw& law, int n, std::uint64_t seed) {
    const bool all_gaussian = std::all_of(law.families.begin(), law.families.end(),
                                          [](Family f) { return f == Family::Gaussian; });
    return all_gaussian ? sample_gaussian_tilted(law, n, seed) : sample_binary(law, n, seed);
}

// ------------------------------------------------------------------ scenarios

std::string estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::MleBaseline: return "mle";
        case EstimatorKind::DrIdentity: return "dr-identity";
        case EstimatorKind::DrSimple: return "dr-simple";
        case EstimatorKind::DrOptimal: return "dr-optimal";
        case EstimatorKind::Dr1Simple: return "dr1-simple";
        case EstimatorKind::Dr1Optimal: return "dr1-optimal";
        case EstimatorKind::ClosedForm: return "closed-form";
    }
    return "?";
}

EstimatorKind parse_estimator(const std::string& name) {
    for (auto k : {EstimatorKind::MleBaseline, EstimatorKind::DrIdentity, EstimatorKind::DrSimple,
                   EstimatorKind::DrOptimal, EstimatorKind::Dr1Simple, EstimatorKind::Dr1Optimal,
                   EstimatorKind::ClosedForm}) {
        if (estimator_name(k) == name) return k;
    }
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

bool is_doubly_robust(EstimatorKind kind) { return kind != EstimatorKind::MleBaseline; }

bool g_expressible(const TrueLaw& law, const Basis& working) {
    return coefficients_expressible(law.true_basis, law.g_coef, working);
}

bool f_expressible(const TrueLaw& law, const Basis& working) {
    for (int j = 0; j < law.p(); ++j) {
        if (!coefficients_expressible(law.true_basis, law.f_coef.row(j).transpose(), working)) return false;
    }
    return true;
}

Scenario make_scenario(std::string name, std::string description, TrueLaw law, Basis working,
                       bool expect_g_correct, bool expect_f_correct, std::uint64_t seed) {
    law.validate();
    Scenario sc;
    sc.name = std::move(name);
    sc.description = std::move(description);
    sc.g_correct = g_expressible(law, working);
    sc.f_correct = f_expressible(law, working);
    if (sc.g_correct != expect_g_correct || sc.f_correct != expect_f_correct) {
        throw std::logic_error("scenario " + sc.name + ": correctness flags disagree with the law");
    }
    sc.law = std::move(law);
    sc.working_basis = std::move(working);
    sc.seed = seed;
    sc.estimators = {EstimatorKind::MleBaseline, EstimatorKind::DrIdentity, EstimatorKind::DrSimple,
                     EstimatorKind::DrOptimal, EstimatorKind::Dr1Simple};
    if (sc.law.families.front() == Family::Bernoulli) sc.estimators.push_back(EstimatorKind::ClosedForm);
    return sc;
}

namespace {

// X uniform on [-1.5, 1.5]^2. The true basis adds x1^2 to the working
// basis {1, x1, x2}; misspecified nuisance functions load on it. With
// strong_link, Z and the outcome depend on x1 only, so omitting x1^2 from g
// visibly biases the outcome MLE.
Basis true_basis() { return Basis::linear(2).add_square(0); }
Basis working_basis() { return Basis::linear(2); }

Eigen::VectorXd coef(double c0, double c1, double c2, double c11) {
    return (Eigen::VectorXd(4) << c0, c1, c2, c11).finished();
}

TrueLaw make_law(double beta, Family family, bool g_ok, bool f_ok, bool strong_link) {
    TrueLaw law;
    law.beta_star = Eigen::VectorXd::Constant(1, beta);
    law.x_law = XLaw::uniform(2, -1.5, 1.5);
    law.true_basis = true_basis();
    law.families = {family};
    law.sigma2 = Eigen::VectorXd::Constant(1, 1.0);
    law.g_coef = g_ok ? coef(-0.2, 1.0, -0.5, 0.0) : coef(-3.5, 1.5, 0.0, 3.0);
    if (family == Family::Bernoulli) {
        const double s = strong_link ? 0.75 : 0.6;
        const double t = strong_link ? 0.0 : 0.4;
        law.f_coef = (f_ok ? coef(0.0, s, t, 0.0) : coef(-1.5, s, t, 2.0)).transpose();
    } else {
        const double t = strong_link ? 0.0 : 0.4;
        law.f_coef = (f_ok ? coef(0.0, 0.5, t, 0.0) : coef(-0.75, 0.5, t, 1.0)).transpose();
    }
    return law;
}

std::vector<Scenario> build_catalog() {
    std::vector<Scenario> out;
    struct Spec {
        const char* tag;
        const char* what;
        double beta;
        bool g_ok;
        bool f_ok;
        bool strong_link;
    };
    const Spec specs[] = {
        {"S1", "both nuisance models correct, beta* = 0.5", 0.5, true, true, false},
        {"S2", "g misspecified (omits x1^2), f correct, beta* = 0.5", 0.5, false, true, true},
        {"S3", "g correct, f misspecified (omits x1^2), beta* = 0.5", 0.5, true, false, false},
        {"S4", "both misspecified, beta* = 0.5", 0.5, false, false, true},
        {"S1b0", "both correct, beta* = 0 (efficiency of simple phi)", 0.0, true, true, false},
        {"S1b1", "both correct, beta* = 1 (efficiency ordering)", 1.0, true, true, false},
    };
    std::uint64_t seed = 20180101;
    for (const auto& s : specs) {
        for (Family fam : {Family::Bernoulli, Family::Gaussian}) {
            const std::string edition = fam == Family::Bernoulli ? "-bin" : "-gauss";
            const std::string z_desc = fam == Family::Bernoulli ? "binary Z" : "Gaussian Z";
            out.push_back(make_scenario(std::string(s.tag) + edition, std::string(s.what) + "; " + z_desc,
                                        make_law(s.beta, fam, s.g_ok, s.f_ok, s.strong_link), working_basis(),
                                        s.g_ok, s.f_ok, seed++));
        }
    }
    return out;
}

}  // namespace

std::vector<Scenario> scenario_catalog() { return build_catalog(); }

const Scenario& find_scenario(const std::string& name) {
    static const std::vector<Scenario> catalog = build_catalog();
    for (const auto& sc : catalog) {
        if (sc.name == name) return sc;
    }
    std::string valid;
    for (const auto& sc : catalog) valid += (valid.empty() ? "" : ", ") + sc.name;
    throw std::invalid_argument("unknown scenario '" + name + "'; valid names: " + valid);
}

std::vector<std::string> scenario_names() {
    std::vector<std::string> names;
    for (const auto& sc : scenario_catalog()) names.push_back(sc.name);
    return names;
}

std::vector<std::string> expand_scenario_names(const std::vector<std::string>& names) {
    const std::vector<std::string> all = scenario_names();
    std::vector<std::string> out;
    for (const auto& name : names) {
        if (std::find(all.begin(), all.end(), name) != all.end()) {
            out.push_back(name);
            continue;
        }
        bool matched = false;
        for (const auto& candidate : all) {
            if (candidate.rfind(name + "-", 0) == 0) {
                out.push_back(candidate);
                matched = true;
            }
        }
        if (!matched) find_scenario(name);  // throws with the list of valid names
    }
    return out;
}

// ------------------------------------------------------------------ Monte Carlo

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t r) {
    return splitmix64(splitmix64(seed) ^ (r + 1) * 0xD1B54A32D192ED03ULL);
}

const EstimatorSummary& MonteCarloSummary::at(const std::string& estimator) const {
    for (const auto& e : estimators) {
        if (e.estimator == estimator) return e;
    }
    throw std::out_of_range("no estimator '" + estimator + "' in summary of " + scenario);
}

namespace {

struct ReplicationResult {
    std::vector<double> estimate;
    std::vector<double> std_error;
    std::vector<char> ok;
};

ReplicationResult run_replication(const Scenario& sc, int n, std::uint64_t seed, int component,
                                  double level) {
    const size_t k = sc.estimators.size();
    ReplicationResult res{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
                          std::vector<char>(k, 0)};
    Dataset data;
    OutcomeFit outcome;
    CovariateFit covar;
    try {
        data = sample(sc.law, n, seed);
        outcome = fit_outcome_mle(data, sc.working_basis);
        covar = fit_covariate(data, sc.working_basis, sc.law.families);
    } catch (const std::exception&) {
        return res;
    }
    std::optional<CovariateFit> covar1;
    const auto record = [&](size_t slot, const EstimateReport& rep) {
        res.estimate[slot] = rep.beta_hat(component);
        res.std_error[slot] = rep.std_errors(component);
        res.ok[slot] = 1;
    };
    for (size_t slot = 0; slot < k; ++slot) {
        try {
            switch (sc.estimators[slot]) {
                case EstimatorKind::MleBaseline: {
                    const Eigen::MatrixXd s1_beta = outcome.s1.leftCols(data.p());
                    const double nn = static_cast<double>(data.n());
                    res.estimate[slot] = outcome.params.beta(component);
                    res.std_error[slot] = std::sqrt(s1_beta.col(component).squaredNorm()) / nn;
                    res.ok[slot] = 1;
                    break;
                }
                case EstimatorKind::DrIdentity:
                    record(slot, solve_beta(data, outcome, covar, {PhiVariant::Identity}, sc.working_basis, level));
                    break;
                case EstimatorKind::DrSimple:
                    record(slot, solve_beta(data, outcome, covar, {PhiVariant::Simple}, sc.working_basis, level));
                    break;
                case EstimatorKind::DrOptimal:
                    record(slot, solve_beta(data, outcome, covar, {PhiVariant::Optimal}, sc.working_basis, level));
                    break;
                case EstimatorKind::Dr1Simple:
                case EstimatorKind::Dr1Optimal: {
                    if (!covar1) covar1 = fit_covariate_y1(data, sc.working_basis, sc.law.families);
                    const PhiSpec phi{sc.estimators[slot] == EstimatorKind::Dr1Simple ? PhiVariant::Simple
                                                                                       : PhiVariant::Optimal};
                    record(slot, solve_beta_y1(data, outcome, *covar1, phi, sc.working_basis, level));
                    break;
                }
                case EstimatorKind::ClosedForm: {
                    const double beta = closed_form_binary(data, outcome, covar, sc.working_basis);
                    const InfluenceExpansion ex =
                        influence_assemble(data, Eigen::VectorXd::Constant(1, beta), outcome, covar,
                                           {PhiVariant::Simple}, sc.working_basis);
                    res.estimate[slot] = beta;
                    res.std_error[slot] = std::sqrt(ex.covariance(0, 0));
                    res.ok[slot] = 1;
                    break;
                }
            }
        } catch (const std::exception&) {
            res.ok[slot] = 0;
        }
    }
    return res;
}

}  // namespace

MonteCarloSummary run_scenario(const Scenario& sc, const RunOptions& options) {
    const int reps = options.replications > 0 ? options.replications : sc.replications;
    const int n = options.n > 0 ? options.n : sc.n;
    if (options.component < 0 || options.component >= sc.law.p()) {
        throw std::invalid_argument("run_scenario: component out of range");
    }
    std::vector<ReplicationResult> results(static_cast<size_t>(reps));
    std::atomic<int> next{0};
    const auto worker = [&]() {
        for (int r = next++; r < reps; r = next++) {
            results[static_cast<size_t>(r)] =
                run_replication(sc, n, replication_seed(sc.seed, static_cast<std::uint64_t>(r)),
                                options.component, options.level);
        }
    };
    const int workers = std::max(1, std::min(options.workers, reps));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const double truth = sc.law.beta_star(options.component);
    const double crit = normal_critical_value(options.level);
    MonteCarloSummary summary;
    summary.scenario = sc.name;
    summary.beta_star = truth;
    summary.n = n;
    summary.replications = reps;
    for (size_t k = 0; k < sc.estimators.size(); ++k) {
        EstimatorSummary s;
        s.estimator = estimator_name(sc.estimators[k]);
        double sum = 0.0;
        double sum_se = 0.0;
        int covered = 0;
        for (const auto& r : results) {
            if (!r.ok[k]) {
                ++s.n_fail;
                continue;
            }
            ++s.n_ok;
            sum += r.estimate[k];
            sum_se += r.std_error[k];
            covered += std::abs(r.estimate[k] - truth) <= crit * r.std_error[k];
        }
        if (s.n_fail > kMaxFailureShare * reps) {
            throw std::runtime_error("scenario " + sc.name + ": estimator " + s.estimator + " failed in " +
                                     std::to_string(s.n_fail) + " of " + std::to_string(reps) +
                                     " replications");
        }
        if (s.n_ok > 0) {
            const double mean = sum / s.n_ok;
            double ss = 0.0;
            double se = 0.0;
            for (const auto& r : results) {
                if (!r.ok[k]) continue;
                ss += (r.estimate[k] - mean) * (r.estimate[k] - mean);
                se += (r.estimate[k] - truth) * (r.estimate[k] - truth);
            }
            s.bias = mean - truth;
            s.sd = std::sqrt(ss / s.n_ok);
            s.rmse = std::sqrt(se / s.n_ok);
            s.mean_se = sum_se / s.n_ok;
            s.coverage = static_cast<double>(covered) / s.n_ok;
            s.mcse = s.sd / std::sqrt(static_cast<double>(s.n_ok));
        }
        summary.estimators.push_back(s);
    }
    return summary;
}

}  // namespace drlogit
