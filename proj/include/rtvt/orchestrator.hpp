#pragma once

#include "rtvt/core_model.hpp"

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rtvt {

struct Route {
    enum class From { speaker_raw, pipeline_output };
    enum class To { pipeline_input, participant };

    From from = From::speaker_raw;
    PipelineId from_pipeline = 0; // meaningful for pipeline_output
    To to = To::participant;
    PipelineId to_pipeline = 0;   // meaningful for pipeline_input
    ParticipantId to_participant; // meaningful for participant

    static Route feed(PipelineId pipeline);
    static Route deliver(PipelineId pipeline, ParticipantId listener);

    friend auto operator<=>(const Route&, const Route&) = default;
    friend bool operator==(const Route&, const Route&) = default;
};

struct RoutingTable {
    std::map<LanguageTag, PipelineId> pipeline_map; // target language -> pipeline
    std::set<Route> routes;
    std::set<ParticipantId> bypass; // receive the raw speaker stream

    friend bool operator==(const RoutingTable&, const RoutingTable&) = default;
};

class Meeting {
public:
    Meeting() = default;
    explicit Meeting(std::size_t pool_capacity) : pool(pool_capacity) {}

    std::map<ParticipantId, Participant> participants;
    std::optional<ParticipantId> active_speaker;
    GpuPool pool;
    RoutingTable routing;
    std::map<PipelineId, PipelineInstance> pipelines; // includes decommissioned history
    PipelineId next_pipeline_id = 1;

    /// Throws PreconditionError on duplicate id.
    void add_participant(Participant p);
    /// Removing the active speaker clears active_speaker; routing is left for
    /// the next orchestration pass to repair.
    void remove_participant(const ParticipantId& id);
    void set_language(const ParticipantId& id, LanguageTag language);

    bool contains(const ParticipantId& id) const { return participants.count(id) != 0; }
    std::size_t size() const noexcept { return participants.size(); }
    std::size_t active_pipeline_count() const noexcept { return routing.pipeline_map.size(); }
    const Participant& participant(const ParticipantId& id) const;
};

struct OrchestratorConfig {
    // Allocate a pipeline for listeners that share the speaker's language
    // (identity translation) instead of routing them through bypass.
    bool literal_algorithm1 = false;
    // Listeners whose language could not be allocated receive the raw stream.
    bool fallback_to_raw = false;
};

struct OrchestrationEvent {
    enum class Kind {
        pipeline_allocated,
        pipeline_reused,
        pipeline_decommissioned,
        route_added,
        allocation_failed,
        speaker_bypassed,
    };

    Kind kind = Kind::speaker_bypassed;
    std::optional<LanguageTag> language;
    double time = 0.0;
    std::optional<PipelineId> pipeline;
    std::optional<ParticipantId> participant;
    bool reinitialized = false; // pipeline_reused with a changed source language
};

const char* to_string(OrchestrationEvent::Kind kind) noexcept;

struct OrchestrationResult {
    Meeting meeting;
    std::vector<OrchestrationEvent> events;
};

/// Languages that need a translation pipeline while `speaker` holds the floor.
/// Throws PreconditionError when the speaker is not a participant.
std::set<LanguageTag> required_languages(const Meeting& meeting, const ParticipantId& speaker,
                                         const OrchestratorConfig& config = {});

/// One token-ring transition: hand the floor to `new_speaker`, release stale
/// pipelines, reuse or allocate one pipeline per required language (in
/// lexicographic order), then rebuild listener routes.
///
/// Pool exhaustion for a language is reported as an allocation_failed event and
/// the pass continues. An unknown speaker throws PreconditionError; the input
/// meeting is never modified.
OrchestrationResult update_orchestration(const Meeting& meeting, const ParticipantId& new_speaker,
                                         const OrchestratorConfig& config = {}, double time = 0.0);

/// Speakerless interval: every pipeline is decommissioned and all routes cleared.
OrchestrationResult suspend_orchestration(const Meeting& meeting, double time = 0.0);

struct InvariantViolation {
    enum class Kind { speaker_bypass, minimal_allocation, stale_pipeline, pool_conservation, listener_routing };
    Kind kind;
    std::string message;
};

const char* to_string(InvariantViolation::Kind kind) noexcept;

std::vector<InvariantViolation> verify_invariants(const Meeting& meeting, const OrchestratorConfig& config = {});

} // namespace rtvt
