#pragma once

#include "drlogit/estimators.hpp"
#include "drlogit/sim_harness.hpp"
#include "drlogit/types.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace drlogit {

/// Reads a dataset from CSV with a header naming y, z1..zp and x1..xq (any
/// column order). Throws std::runtime_error naming the offending row/column.
Dataset read_csv(std::istream& in, const std::string& source = "<stream>");
Dataset read_csv_file(const std::string& path);

// Header y,z1..zp,x1..xq; shortest round-trip formatting.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv_file(const Dataset& data, const std::string& path);

// Shortest representation that parses back to the same double.
std::string format_exact(double v);
// 6 significant digits for human tables.
std::string format_sig6(double v);

nlohmann::json to_json(const EstimatorSummary& s, const std::string& scenario);
nlohmann::json to_json(const std::vector<MonteCarloSummary>& summaries);
std::string summary_csv(const MonteCarloSummary& summary);
std::string summary_markdown(const std::vector<MonteCarloSummary>& summaries);

nlohmann::json to_json(const std::string& name, const EstimateReport& report);

}  // namespace drlogit
