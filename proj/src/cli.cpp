#include "drlogit/cli.hpp"

#include "drlogit/estimators.hpp"
#include "drlogit/nuisance.hpp"
#include "drlogit/report_io.hpp"
#include "drlogit/sim_harness.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace drlogit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::string> string_list(const json& v, const std::string& key) {
    if (v.is_string()) return split_list(v.get<std::string>());
    if (!v.is_array()) throw UsageError("config: '" + key + "' must be a string or an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) throw UsageError("config: '" + key + "' entries must be strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::uint64_t seed_from_name(std::uint64_t seed, const std::string& name) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : name) h = (h ^ c) * 1099511628211ULL;
    return replication_seed(seed, h);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

std::string pad(const std::string& s, size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::vector<Family> infer_families(const Dataset& data) {
    std::vector<Family> out;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        const bool binary = (data.z.col(j).array() == 0.0 || data.z.col(j).array() == 1.0).all();
        out.push_back(binary ? Family::Bernoulli : Family::Gaussian);
    }
    return out;
}

EstimateReport outcome_report(const OutcomeFit& fit, Eigen::Index p, Eigen::Index n, double level) {
    EstimateReport rep;
    rep.beta_hat = fit.params.beta;
    const Eigen::MatrixXd s1_beta = fit.s1.leftCols(p);
    rep.covariance = s1_beta.transpose() * s1_beta / static_cast<double>(n * n);
    rep.std_errors = rep.covariance.diagonal().cwiseSqrt();
    rep.level = level;
    const double crit = normal_critical_value(level);
    for (Eigen::Index k = 0; k < p; ++k) {
        rep.wald_ci.emplace_back(rep.beta_hat(k) - crit * rep.std_errors(k),
                                 rep.beta_hat(k) + crit * rep.std_errors(k));
    }
    rep.influence = s1_beta;
    rep.diagnostics.iterations = fit.iterations;
    rep.diagnostics.final_eq_norm = fit.eq_norm;
    rep.diagnostics.converged = fit.converged;
    return rep;
}

}  // namespace

void RunConfig::validate() const {
    if (!(level > 0.0 && level < 1.0)) throw UsageError("confidence level must be in (0, 1)");
    if (workers < 1) throw UsageError("worker count must be >= 1");
    if (replications < 0 || n < 0) throw UsageError("replications and n must be non-negative");
    if (outcome_fit != "mle" && outcome_fit != "calibrated") {
        throw UsageError("outcome_fit must be 'mle' or 'calibrated'");
    }
    for (const auto& e : estimators) {
        if (e != "mle" && e != "dr" && e != "dr1" && e != "closed-form") {
            throw UsageError("unknown estimator '" + e + "' (mle, dr, dr1, closed-form)");
        }
    }
}

RunConfig load_config(const std::string& path, RunConfig cfg) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw UsageError("config '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw UsageError("config '" + path + "' must hold a JSON object");
    static const std::set<std::string> known{"data",  "scenarios", "scenario",     "basis",
                                             "families", "phi",    "estimators",   "outcome_fit",
                                             "level", "seed",      "out",          "workers",
                                             "replications", "n"};
    try {
        for (const auto& [key, value] : j.items()) {
            if (!known.count(key)) throw UsageError("config: unknown key '" + key + "'");
            if (key == "data") cfg.data_path = value.get<std::string>();
            if (key == "scenarios" || key == "scenario") cfg.scenarios = string_list(value, key);
            if (key == "basis") cfg.basis_terms = string_list(value, key);
            if (key == "families") {
                cfg.families.clear();
                for (const auto& f : string_list(value, key)) cfg.families.push_back(parse_family(f));
            }
            if (key == "phi") {
                cfg.phis.clear();
                for (const auto& f : string_list(value, key)) cfg.phis.push_back(parse_phi_variant(f));
            }
            if (key == "estimators") cfg.estimators = string_list(value, key);
            if (key == "outcome_fit") cfg.outcome_fit = value.get<std::string>();
            if (key == "level") cfg.level = value.get<double>();
            if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            if (key == "out") cfg.out_dir = value.get<std::string>();
            if (key == "workers") cfg.workers = value.get<int>();
            if (key == "replications") cfg.replications = value.get<int>();
            if (key == "n") cfg.n = value.get<int>();
        }
    } catch (const json::exception& e) {
        throw UsageError("config '" + path + "': " + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError("config '" + path + "': " + e.what());
    }
    return cfg;
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
    config.validate();
    if (config.data_path.empty()) throw UsageError("fit: --data FILE is required");
    const Dataset data = read_csv_file(config.data_path);
    data.validate();

    const Basis basis = config.basis_terms.empty() ? Basis::linear(static_cast<int>(data.q()))
                                                   : Basis::parse(config.basis_terms);
    if (basis.max_coordinate() >= data.q()) {
        throw UsageError("basis references x" + std::to_string(basis.max_coordinate() + 1) +
                         " but the data have " + std::to_string(data.q()) + " x columns");
    }
    const std::vector<Family> families = config.families.empty() ? infer_families(data) : config.families;
    if (static_cast<Eigen::Index>(families.size()) != data.p()) {
        throw UsageError("config declares " + std::to_string(families.size()) + " families for " +
                         std::to_string(data.p()) + " z columns");
    }
    const auto wants = [&](const std::string& e) {
        return std::find(config.estimators.begin(), config.estimators.end(), e) != config.estimators.end();
    };

    const OutcomeFit outcome = config.outcome_fit == "mle" ? fit_outcome_mle(data, basis)
                                                           : fit_outcome_calibrated(data, basis);
    std::vector<std::pair<std::string, EstimateReport>> reports;
    if (wants("mle")) reports.emplace_back("mle", outcome_report(outcome, data.p(), data.n(), config.level));
    if (wants("dr") || wants("closed-form")) {
        const CovariateFit covar = fit_covariate(data, basis, families);
        if (wants("dr")) {
            for (auto phi : config.phis) {
                reports.emplace_back("dr-" + std::string(to_string(phi)),
                                     solve_beta(data, outcome, covar, {phi}, basis, config.level));
            }
        }
        if (wants("closed-form")) {
            const double beta = closed_form_binary(data, outcome, covar, basis);
            EstimateReport rep = solve_beta(data, outcome, covar, {PhiVariant::Simple}, basis, config.level);
            rep.beta_hat(0) = beta;
            reports.emplace_back("closed-form", std::move(rep));
        }
    }
    if (wants("dr1")) {
        const CovariateFit covar1 = fit_covariate_y1(data, basis, families);
        for (auto phi : config.phis) {
            reports.emplace_back("dr1-" + std::string(to_string(phi)),
                                 solve_beta_y1(data, outcome, covar1, {phi}, basis, config.level));
        }
    }

    json estimates = json::array();
    for (const auto& [name, rep] : reports) {
        json j = to_json(name, rep);
        if (name == "mle") {
            j.erase("phi");
            j.erase("side");
        }
        estimates.push_back(std::move(j));
    }
    std::vector<std::string> family_names;
    for (auto f : families) family_names.emplace_back(to_string(f));
    const json doc = {{"data", fs::path(config.data_path).filename().string()},
                      {"n", data.n()},
                      {"p", data.p()},
                      {"q", data.q()},
                      {"basis", basis.describe()},
                      {"families", family_names},
                      {"outcome_fit", config.outcome_fit},
                      {"level", config.level},
                      {"estimates", estimates}};
    fs::create_directories(config.out_dir);
    write_text(fs::path(config.out_dir) / "estimates.json", doc.dump(2) + "\n");

    out << pad("estimator", 16) << pad("coef", 6) << pad("estimate", 14) << pad("std.error", 14)
        << pad("lower", 14) << "upper\n";
    for (const auto& [name, rep] : reports) {
        for (Eigen::Index k = 0; k < rep.beta_hat.size(); ++k) {
            out << pad(name, 16) << pad("z" + std::to_string(k + 1), 6)
                << pad(format_sig6(rep.beta_hat(k)), 14) << pad(format_sig6(rep.std_errors(k)), 14)
                << pad(format_sig6(rep.wald_ci[static_cast<size_t>(k)].first), 14)
                << format_sig6(rep.wald_ci[static_cast<size_t>(k)].second) << "\n";
        }
    }
    (void)err;
    return 0;
}

namespace {

Scenario configured_scenario(const std::string& name, const RunConfig& config) {
    Scenario sc = find_scenario(name);
    if (config.seed) sc.seed = seed_from_name(*config.seed, sc.name);
    return sc;
}

RunOptions run_options(const RunConfig& config) {
    RunOptions opt;
    opt.workers = config.workers;
    opt.level = config.level;
    opt.replications = config.replications;
    opt.n = config.n;
    return opt;
}

}  // namespace

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    config.validate();
    std::vector<std::string> names;
    try {
        names = expand_scenario_names(config.scenarios.empty() ? std::vector<std::string>{"S1", "S2", "S3", "S4"}
                                                               : config.scenarios);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    fs::create_directories(config.out_dir);
    std::vector<MonteCarloSummary> summaries;
    for (const auto& name : names) {
        const Scenario sc = configured_scenario(name, config);
        err << "simulating " << sc.name << " (" << sc.description << ")\n";
        summaries.push_back(run_scenario(sc, run_options(config)));
        const auto& s = summaries.back();
        write_text(fs::path(config.out_dir) / (sc.name + ".csv"), summary_csv(s));
        write_text(fs::path(config.out_dir) / (sc.name + ".json"), to_json(std::vector{s}).dump(2) + "\n");
    }
    write_text(fs::path(config.out_dir) / "summary.json", to_json(summaries).dump(2) + "\n");
    const std::string table = summary_markdown(summaries);
    write_text(fs::path(config.out_dir) / "summary.md", table);
    out << table;
    return 0;
}

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
    config.validate();
    if (config.phis.size() < 2) throw UsageError("compare needs at least two phi variants");
    if (config.scenarios.size() != 1) throw UsageError("compare needs exactly one scenario");
    Scenario sc;
    try {
        sc = configured_scenario(config.scenarios.front(), config);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    sc.estimators.clear();
    for (auto phi : config.phis) {
        sc.estimators.push_back(phi == PhiVariant::Identity ? EstimatorKind::DrIdentity
                                : phi == PhiVariant::Simple ? EstimatorKind::DrSimple
                                                            : EstimatorKind::DrOptimal);
    }
    err << "comparing phi variants on " << sc.name << "\n";
    const MonteCarloSummary summary = run_scenario(sc, run_options(config));
    std::vector<NamedVariance> entries;
    for (const auto& s : summary.estimators) entries.push_back({s.estimator, s.sd * s.sd});
    const std::vector<EfficiencyRow> rows = efficiency_compare(entries);

    json jrows = json::array();
    std::ostringstream table;
    table << "| estimator | variance | ratio_to_" << rows.front().name << " | ratio_to_best |\n"
          << "|---|---:|---:|---:|\n";
    for (const auto& r : rows) {
        jrows.push_back({{"estimator", r.name},
                         {"variance", r.variance},
                         {"ratio_to_reference", r.ratio_to_reference},
                         {"ratio_to_best", r.ratio_to_best}});
        table << "| " << r.name << " | " << format_sig6(r.variance) << " | "
              << format_sig6(r.ratio_to_reference) << " | " << format_sig6(r.ratio_to_best) << " |\n";
    }
    const json doc = {{"scenario", sc.name},
                      {"reference", rows.front().name},
                      {"efficiency", jrows},
                      {"summary", to_json(std::vector{summary})}};
    fs::create_directories(config.out_dir);
    write_text(fs::path(config.out_dir) / "compare.json", doc.dump(2) + "\n");
    write_text(fs::path(config.out_dir) / "compare.md", table.str());
    out << table.str();
    return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Estimate beta in a logistic partially linear model by doubly robust estimating equations", "drlogit"};
    app.require_subcommand(1);

    std::string config_path, data_path, phi_flag, out_dir, scenarios_flag;
    double level = 0.0;
    int workers = 0;
    std::uint64_t seed = 0;

    auto* fit = app.add_subcommand("fit", "estimate beta on a CSV dataset");
    fit->add_option("--data", data_path, "CSV with columns y, z1..zp, x1..xq")->required();
    fit->add_option("--config", config_path, "JSON configuration");
    fit->add_option("--phi", phi_flag, "identity|simple|optimal (comma-separated list allowed)");
    fit->add_option("--level", level, "confidence level of Wald intervals");
    fit->add_option("--out", out_dir, "output directory for estimates.json");

    auto* sim = app.add_subcommand("simulate", "run Monte Carlo scenarios");
    sim->add_option("--config", config_path, "JSON configuration")->required();
    sim->add_option("--scenarios", scenarios_flag, "comma-separated scenario names, e.g. S1,S2");
    sim->add_option("--workers", workers, "worker threads");
    auto* sim_seed = sim->add_option("--seed", seed, "base seed");

    auto* cmp = app.add_subcommand("compare", "compare phi variants on one scenario");
    cmp->add_option("--config", config_path, "JSON configuration")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (const char* env = std::getenv("DRLOGIT_SEED"); env && *env) {
            try {
                cfg.seed = std::stoull(env);
            } catch (const std::exception&) {
                throw UsageError("DRLOGIT_SEED must be an unsigned integer");
            }
        }
        if (!config_path.empty()) cfg = load_config(config_path, cfg);
        if (!data_path.empty()) cfg.data_path = data_path;
        if (!phi_flag.empty()) {
            cfg.phis.clear();
            try {
                for (const auto& p : split_list(phi_flag)) cfg.phis.push_back(parse_phi_variant(p));
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }
        if (level != 0.0) cfg.level = level;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!scenarios_flag.empty()) cfg.scenarios = split_list(scenarios_flag);
        if (workers != 0) cfg.workers = workers;
        if (sim_seed->count() > 0) cfg.seed = seed;

        if (fit->parsed()) {
            cfg.command = "fit";
            return cmd_fit(cfg, out, err);
        }
        if (sim->parsed()) {
            cfg.command = "simulate";
            return cmd_simulate(cfg, out, err);
        }
        cfg.command = "compare";
        return cmd_compare(cfg, out, err);
    } catch (const UsageError& e) {
        err << "drlogit: usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "drlogit: error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace drlogit
