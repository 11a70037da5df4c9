#pragma once

#include "drlogit/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drlogit {

struct RunConfig {
    std::string command;                    // fit | simulate | compare
    std::string data_path;                  // fit
    std::vector<std::string> scenarios;     // simulate; compare uses the first
    std::vector<std::string> basis_terms;   // fit; empty means 1, x1..xq
    std::vector<Family> families;           // fit; empty means inferred from z
    std::vector<PhiVariant> phis{PhiVariant::Identity, PhiVariant::Simple, PhiVariant::Optimal};
    std::vector<std::string> estimators{"mle", "dr"};  // fit: mle, dr, dr1, closed-form
    std::string outcome_fit = "mle";        // mle | calibrated
    double level = 0.95;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int workers = 1;
    int replications = 0;                   // 0: scenario default
    int n = 0;                              // 0: scenario default

    void validate() const;
};

// Fields present in the JSON file override the defaults in `base`.
RunConfig load_config(const std::string& path, RunConfig base = {});

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Entry point of the drlogit executable. Exit codes: 0 success, 1 data or
/// model error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drlogit
