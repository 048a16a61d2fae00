#pragma once

#include "rtvt/latency.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rtvt {

inline constexpr std::string_view measurement_csv_header = "label,t_seconds,run,p_seconds";

/// Parses the measurement CSV. Sets are returned in order of first appearance
/// of their label. Malformed rows raise ParseError naming `source` and the line.
std::vector<MeasurementSet> read_measurements_csv(std::istream& in, const std::string& source = "<input>");
std::vector<MeasurementSet> load_measurements_csv(const std::string& path);

void write_measurements_csv_header(std::ostream& out);
void write_measurements_csv_rows(std::ostream& out, const MeasurementSet& set);

nlohmann::json model_to_json(const LatencyModel& model);
/// Throws ParseError for structural problems, DomainError for invalid parameters.
LatencyModel model_from_json(const nlohmann::json& j);
LatencyModel load_model_json(const std::string& path);
void save_model_json(const LatencyModel& model, const std::string& path);

/// Per-duration means of the three hardware tiers (T4, RTX 4060, A100), one
/// mean row per tier and duration.
const std::vector<MeasurementSet>& reference_measurements();

/// Table model of a reference tier by label ("A100", "RTX4060", "T4"),
/// case-insensitive. Throws ValidationError for unknown labels.
LatencyModel reference_table_model(std::string_view label);

} // namespace rtvt
