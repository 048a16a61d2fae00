#pragma once

#include "rtvt/simulator.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rtvt {

/// Scenario document:
///
///   {
///     "name": "bilingual_10",
///     "participants": [{"id": "A", "language": "en"}, ...],
///     "pool_capacity": 4,
///     "unit_cost": 1.0,                      (optional, default 1)
///     "latency_model": {model JSON} | "A100" | "RTX4060" | "T4",
///     "segment_duration": 3 | "auto",        (optional, default "auto")
///     "run_duration": 30,
///     "seed": 42,                            (optional)
///     "workers": 1,                          (optional)
///     "literal_algorithm1": false,           (optional)
///     "fallback_to_raw": false,              (optional)
///     "events": [
///       {"time": 0, "kind": "speaker-change", "id": "A"},
///       {"time": 5, "kind": "join", "id": "X", "language": "fr"},
///       {"time": 9, "kind": "language-change", "id": "X", "language": "de"},
///       {"time": 12, "kind": "leave", "id": "X"}
///     ]
///   }
///
/// Structural problems throw ParseError; semantic ones are left to
/// validate_scenario.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::string& path);

std::string scenario_digest(const Scenario& scenario);

nlohmann::json report_to_json(const RunReport& report);

inline constexpr std::string_view metrics_csv_header = "time_s,k,token_cost,naive_cost,alloc_failures,stalls_cum";
void write_metrics_csv(std::ostream& out, const std::vector<MetricsSample>& metrics);

} // namespace rtvt
