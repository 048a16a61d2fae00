#pragma once

#include "rtvt/core_model.hpp"
#include "rtvt/latency.hpp"
#include "rtvt/orchestrator.hpp"
#include "rtvt/segproc.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rtvt {

struct ScenarioEvent {
    enum class Kind { speaker_change, join, leave, language_change };

    double time = 0.0;
    Kind kind = Kind::speaker_change;
    ParticipantId id;
    std::optional<LanguageTag> language; // join and language_change
};

const char* to_string(ScenarioEvent::Kind kind) noexcept;

struct Scenario {
    std::string name;
    std::vector<Participant> participants;
    std::size_t pool_capacity = 0;
    double unit_cost = 1.0;
    LatencyModel latency_model = LatencyModel::affine(0.0, 1.0);
    std::optional<double> segment_duration; // nullopt: resolve automatically
    std::vector<ScenarioEvent> events;
    double run_duration = 0.0;
    std::uint64_t seed = 42;
    std::size_t workers = 1;
    OrchestratorConfig orchestrator;
};

/// Every rule the scenario breaks; empty when runnable.
std::vector<std::string> validate_scenario(const Scenario& scenario);

/// Same-timestamp events are applied leaves, joins, language changes, then
/// speaker changes; within a kind by participant id. Returns indices into
/// scenario.events in application order.
std::vector<std::size_t> application_order(const std::vector<ScenarioEvent>& events);

struct SegmentDurationChoice {
    double seconds = 0.0;
    bool automatic = false;
    bool viable = false;
    double tau = 0.0;
    std::optional<std::string> warning;
};

/// Explicit duration, or: smallest tabulated duration with tau < 1 (table
/// models), the continuous crossing rounded up to the next 10 ms (analytic
/// models), or the largest tabulated duration with a warning when neither exists.
SegmentDurationChoice resolve_segment_duration(const LatencyModel& model, std::optional<double> requested);

struct MetricsSample {
    double time = 0.0;
    std::size_t participants = 0;
    std::size_t k = 0;
    double token_cost = 0.0;
    double naive_cost = 0.0;          // C*N*(N-1), 0 below two participants
    std::size_t alloc_failures = 0;   // cumulative
    std::size_t stalls_cum = 0;       // listener stalls that began at or before `time`
};

struct LanguageTimeline {
    std::size_t turn = 0;
    ParticipantId speaker;
    LanguageTag source;
    LanguageTag target;
    PipelineId pipeline = 0;
    double active_from = 0.0;
    double active_to = 0.0;
    bool cold_start = false;
    std::size_t segments = 0;
    double startup_delay = 0.0;
    double glass_latency = 0.0;
    std::size_t stall_count = 0;
    double stall_total = 0.0;
};

struct TurnSummary {
    std::size_t index = 0;
    ParticipantId speaker;
    LanguageTag source;
    double start = 0.0;
    double end = 0.0;
};

struct ListenerTotals {
    std::size_t stall_count = 0;
    double stall_total = 0.0;
    double translated_seconds = 0.0;
    double bypass_seconds = 0.0;
    double unserved_seconds = 0.0;
    std::vector<double> startup_delays; // one per pipeline-served span
};

struct RunAggregates {
    std::size_t max_k = 0;
    double mean_k = 0.0;           // time-weighted over the run
    std::size_t total_stalls = 0;
    double total_stall_seconds = 0.0;
    std::size_t allocation_failures = 0;
    std::size_t allocations = 0;
    std::size_t decommissions = 0;
    std::size_t reinitializations = 0;
    std::optional<double> cost_ratio;     // integral of token cost / integral of naive cost
    std::optional<double> max_cost_ratio; // over samples with naive cost > 0
};

struct RunReport {
    std::string scenario_name;
    std::string scenario_digest; // FNV-1a over the canonical scenario JSON
    std::uint64_t seed = 0;
    SegmentDurationChoice segment;
    std::vector<MetricsSample> metrics;
    std::vector<TurnSummary> turns;
    std::vector<LanguageTimeline> timelines;
    std::map<ParticipantId, ListenerTotals> listeners;
    std::vector<OrchestrationEvent> orchestration_events;
    RunAggregates aggregates;
    std::vector<std::string> warnings;
};

/// Deterministic replay of a scenario on a virtual clock. Throws
/// ValidationError listing every violation for malformed scenarios.
RunReport run_scenario(const Scenario& scenario);

// --- cost sweeps -----------------------------------------------------------

enum class Assignment { uniform, distinct, same };

const char* to_string(Assignment a) noexcept;

struct SweepOptions {
    std::vector<std::size_t> n_values;
    std::size_t language_pool = 4; // uniform assignment only
    Assignment assignment = Assignment::uniform;
    CostModel cost;
    std::size_t trials = 100;
    std::uint64_t seed = 42;
};

struct SweepRow {
    std::size_t n = 0;
    double mean_k = 0.0;
    double stderr_k = 0.0;
    std::size_t min_k = 0;
    std::size_t max_k = 0;
    double token_cost = 0.0; // C * mean k
    double naive_cost = 0.0;
    double max_ratio = 0.0;  // largest token/naive over trials
};

/// Orchestrates one speaker turn per trial and reports the resulting pipeline
/// counts. Listeners in `distinct` and `same` never share the speaker's
/// language, so those assignments hit k = N-1 and k = 1 exactly.
std::vector<SweepRow> sweep_cost(const SweepOptions& options);

} // namespace rtvt
