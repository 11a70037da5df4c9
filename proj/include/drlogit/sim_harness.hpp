#pragma once

#include "drlogit/basis.hpp"
#include "drlogit/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace drlogit {

/// Distribution of X: a finite grid with probabilities, or uniform on
/// [lo, hi]^q.
struct XLaw {
    enum class Kind { Grid, Uniform };
    Kind kind = Kind::Uniform;
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd probs;
    int q = 1;
    double lo = 0.0;
    double hi = 1.0;

    static XLaw grid(std::vector<Eigen::VectorXd> points, Eigen::VectorXd probs);
    static XLaw uniform(int q, double lo, double hi);

    int dim() const;
    Eigen::VectorXd draw(std::mt19937_64& rng) const;
};

/// Joint law of (Y, Z, X) given through the odds-ratio factorization
///   p(y, z | x) = c(x)^{-1} exp(beta* 'z y) p(z | Y = 0, x) p(y | Z = 0, x),
/// with p(y = 1 | Z = 0, x) = expit(g*(x)). g* and the Y = 0 mean of each Z
/// component are linear in true_basis: Gaussian components have mean
/// f_coef.row(j) b(x) and variance sigma2(j); Bernoulli components have
/// success probability expit(f_coef.row(j) b(x)).
struct TrueLaw {
    Eigen::VectorXd beta_star;
    XLaw x_law;
    Basis true_basis;
    Eigen::VectorXd g_coef;
    Eigen::MatrixXd f_coef;
    std::vector<Family> families;
    Eigen::VectorXd sigma2;

    int p() const { return static_cast<int>(beta_star.size()); }
    double g_star(const Eigen::VectorXd& x) const;
    Eigen::VectorXd f0_star(const Eigen::VectorXd& x) const;

    void validate() const;
};

// Closed-form tilt for independent Gaussian components:
// log c(x) and P(Y = 1 | X = x).
struct TiltTerms {
    double log_normalizer = 0.0;
    double p_y1 = 0.0;
};
TiltTerms gaussian_tilt(const Eigen::VectorXd& beta, const Eigen::VectorXd& mean,
                        const Eigen::VectorXd& sigma2, double g);

// Normalized 2 x 2 table, cells[y][z], for scalar binary Z.
std::array<std::array<double, 2>, 2> binary_cells(double beta, double f0, double g);

Dataset sample_binary(const TrueLaw& law, int n, std::uint64_t seed);
Dataset sample_gaussian_tilted(const TrueLaw& law, int n, std::uint64_t seed);
// Dispatches on the law's families.
Dataset sample(const TrueLaw& law, int n, std::uint64_t seed);

enum class EstimatorKind { MleBaseline, DrIdentity, DrSimple, DrOptimal, Dr1Simple, Dr1Optimal, ClosedForm };

std::string estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);
bool is_doubly_robust(EstimatorKind kind);

struct Scenario {
    std::string name;
    std::string description;
    TrueLaw law;
    Basis working_basis;
    bool g_correct = true;
    bool f_correct = true;
    int n = 2000;
    int replications = 500;
    std::uint64_t seed = 1;
    std::vector<EstimatorKind> estimators;
};

// Whether the model built on working_basis contains the truth.
bool g_expressible(const TrueLaw& law, const Basis& working);
bool f_expressible(const TrueLaw& law, const Basis& working);

/// Builds a scenario whose correctness flags are derived from the law and
/// basis; throws std::logic_error if they disagree with the expected ones.
Scenario make_scenario(std::string name, std::string description, TrueLaw law, Basis working,
                       bool expect_g_correct, bool expect_f_correct, std::uint64_t seed);

/// S1..S4 in binary ("-bin") and Gaussian ("-gauss") editions plus the
/// efficiency scenarios S1b0 (beta* = 0) and S1b1 (beta* = 1).
std::vector<Scenario> scenario_catalog();
const Scenario& find_scenario(const std::string& name);
std::vector<std::string> scenario_names();
// "S1" expands to every edition of S1; exact names pass through.
std::vector<std::string> expand_scenario_names(const std::vector<std::string>& names);

struct EstimatorSummary {
    std::string estimator;
    double bias = 0.0;
    double sd = 0.0;       // divisor R
    double mean_se = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;
    double mcse = 0.0;     // sd / sqrt(R)
    int n_fail = 0;
    int n_ok = 0;
};

struct MonteCarloSummary {
    std::string scenario;
    double beta_star = 0.0;
    int n = 0;
    int replications = 0;
    std::vector<EstimatorSummary> estimators;

    const EstimatorSummary& at(const std::string& estimator) const;
};

struct RunOptions {
    int workers = 1;
    double level = 0.95;
    int replications = 0;  // 0 keeps the scenario's value
    int n = 0;             // 0 keeps the scenario's value
    int component = 0;     // beta component summarized
};

/// Seed of replication r, from a counter-based split of the scenario seed.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t r);

MonteCarloSummary run_scenario(const Scenario& sc, const RunOptions& options = {});

}  // namespace drlogit
