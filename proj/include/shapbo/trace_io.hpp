#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shapbo/harness.hpp"

namespace shapbo {

/// JSON round-trip for run traces. Floats are serialized with full
/// round-trip precision.
nlohmann::json trace_to_json(const RunTrace& trace);
RunTrace trace_from_json(const nlohmann::json& j);

void save_trace(const RunTrace& trace, const std::string& path);
RunTrace load_trace(const std::string& path);

/// convergence.csv with columns: iteration, protocol, mean_best, std_best.
void write_convergence_csv(
    const std::vector<std::pair<std::string, ConvergenceStats>>& per_protocol,
    const std::string& path);

/// summary.csv from a protocol comparison.
void write_summary_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

}  // namespace shapbo
