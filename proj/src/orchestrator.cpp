#include "rtvt/orchestrator.hpp"

#include "rtvt/errors.hpp"

#include <algorithm>

namespace rtvt {

Route Route::feed(PipelineId pipeline)
{
    Route r;
    r.from = From::speaker_raw;
    r.to = To::pipeline_input;
    r.to_pipeline = pipeline;
    return r;
}

Route Route::deliver(PipelineId pipeline, ParticipantId listener)
{
    Route r;
    r.from = From::pipeline_output;
    r.from_pipeline = pipeline;
    r.to = To::participant;
    r.to_participant = std::move(listener);
    return r;
}

void Meeting::add_participant(Participant p)
{
    if (contains(p.id)) throw PreconditionError("duplicate participant id: " + p.id);
    auto id = p.id;
    participants.emplace(std::move(id), std::move(p));
}

void Meeting::remove_participant(const ParticipantId& id)
{
    if (participants.erase(id) == 0) throw PreconditionError("unknown participant: " + id);
    if (active_speaker == id) active_speaker.reset();
}

void Meeting::set_language(const ParticipantId& id, LanguageTag language)
{
    auto it = participants.find(id);
    if (it == participants.end()) throw PreconditionError("unknown participant: " + id);
    it->second.language = std::move(language);
}

const Participant& Meeting::participant(const ParticipantId& id) const
{
    auto it = participants.find(id);
    if (it == participants.end()) throw PreconditionError("unknown participant: " + id);
    return it->second;
}

const char* to_string(OrchestrationEvent::Kind kind) noexcept
{
    using K = OrchestrationEvent::Kind;
    switch (kind) {
    case K::pipeline_allocated: return "pipeline-allocated";
    case K::pipeline_reused: return "pipeline-reused";
    case K::pipeline_decommissioned: return "pipeline-decommissioned";
    case K::route_added: return "route-added";
    case K::allocation_failed: return "allocation-failed";
    case K::speaker_bypassed: return "speaker-bypassed";
    }
    return "unknown";
}

const char* to_string(InvariantViolation::Kind kind) noexcept
{
    using K = InvariantViolation::Kind;
    switch (kind) {
    case K::speaker_bypass: return "speaker-bypass";
    case K::minimal_allocation: return "minimal-allocation";
    case K::stale_pipeline: return "stale-pipeline";
    case K::pool_conservation: return "pool-conservation";
    case K::listener_routing: return "listener-routing";
    }
    return "unknown";
}

std::set<LanguageTag> required_languages(const Meeting& meeting, const ParticipantId& speaker,
                                         const OrchestratorConfig& config)
{
    const auto& source = meeting.participant(speaker).language;
    std::set<LanguageTag> out;
    for (const auto& [id, p] : meeting.participants) {
        if (id == speaker) continue;
        if (!config.literal_algorithm1 && p.language == source) continue;
        out.insert(p.language);
    }
    return out;
}

namespace {

OrchestrationEvent make_event(OrchestrationEvent::Kind kind, double time)
{
    OrchestrationEvent e;
    e.kind = kind;
    e.time = time;
    return e;
}

void decommission(Meeting& m, const LanguageTag& language, double time, std::vector<OrchestrationEvent>& events)
{
    auto it = m.routing.pipeline_map.find(language);
    const PipelineId id = it->second;
    m.pipelines.at(id).state = PipelineState::decommissioned;
    m.pool.release(id);
    m.routing.pipeline_map.erase(it);

    auto e = make_event(OrchestrationEvent::Kind::pipeline_decommissioned, time);
    e.language = language;
    e.pipeline = id;
    events.push_back(std::move(e));
}

} // namespace

OrchestrationResult update_orchestration(const Meeting& meeting, const ParticipantId& new_speaker,
                                         const OrchestratorConfig& config, double time)
{
    if (!meeting.contains(new_speaker)) throw PreconditionError("speaker is not a participant: " + new_speaker);

    OrchestrationResult result{meeting, {}};
    Meeting& m = result.meeting;
    auto& events = result.events;
    const LanguageTag source = m.participant(new_speaker).language;

    m.active_speaker = new_speaker;
    m.routing.routes.clear();
    m.routing.bypass = {new_speaker};
    {
        auto e = make_event(OrchestrationEvent::Kind::speaker_bypassed, time);
        e.participant = new_speaker;
        e.language = source;
        events.push_back(std::move(e));
    }

    const auto required = required_languages(m, new_speaker, config);

    // Stale pipelines go back to the pool before any allocation so a saturated
    // pool can serve the new speaker's languages in the same pass.
    std::vector<LanguageTag> stale;
    for (const auto& [language, id] : m.routing.pipeline_map) {
        if (required.count(language) == 0) stale.push_back(language);
    }
    for (const auto& language : stale) decommission(m, language, time, events);

    for (const auto& language : required) {
        auto found = m.routing.pipeline_map.find(language);
        if (found != m.routing.pipeline_map.end()) {
            auto& pipeline = m.pipelines.at(found->second);
            auto e = make_event(OrchestrationEvent::Kind::pipeline_reused, time);
            e.language = language;
            e.pipeline = pipeline.id;
            if (pipeline.source_language != source) {
                pipeline.source_language = source;
                pipeline.state = PipelineState::initializing;
                e.reinitialized = true;
            }
            pipeline.state = PipelineState::active;
            events.push_back(std::move(e));
            continue;
        }

        const PipelineId id = m.next_pipeline_id;
        if (!m.pool.acquire(id)) {
            auto e = make_event(OrchestrationEvent::Kind::allocation_failed, time);
            e.language = language;
            events.push_back(std::move(e));
            continue;
        }
        ++m.next_pipeline_id;
        m.pipelines[id] = PipelineInstance{id, source, language, PipelineState::active};
        m.routing.pipeline_map.emplace(language, id);

        auto e = make_event(OrchestrationEvent::Kind::pipeline_allocated, time);
        e.language = language;
        e.pipeline = id;
        events.push_back(std::move(e));
    }

    for (const auto& [id, p] : m.participants) {
        if (id == new_speaker) continue;
        auto found = m.routing.pipeline_map.find(p.language);
        if (found != m.routing.pipeline_map.end()) {
            const PipelineId pipeline = found->second;
            m.routing.routes.insert(Route::feed(pipeline));
            m.routing.routes.insert(Route::deliver(pipeline, id));

            auto e = make_event(OrchestrationEvent::Kind::route_added, time);
            e.language = p.language;
            e.pipeline = pipeline;
            e.participant = id;
            events.push_back(std::move(e));
        } else if (required.count(p.language) == 0 || config.fallback_to_raw) {
            m.routing.bypass.insert(id);
        }
        // otherwise: allocation failed for this language, listener stays unrouted
    }
    return result;
}

OrchestrationResult suspend_orchestration(const Meeting& meeting, double time)
{
    OrchestrationResult result{meeting, {}};
    Meeting& m = result.meeting;
    m.active_speaker.reset();
    m.routing.routes.clear();
    m.routing.bypass.clear();
    std::vector<LanguageTag> all;
    for (const auto& [language, id] : m.routing.pipeline_map) all.push_back(language);
    for (const auto& language : all) decommission(m, language, time, result.events);
    return result;
}

std::vector<InvariantViolation> verify_invariants(const Meeting& meeting, const OrchestratorConfig& config)
{
    using K = InvariantViolation::Kind;
    std::vector<InvariantViolation> out;
    auto report = [&out](K kind, std::string message) { out.push_back({kind, std::move(message)}); };
    const auto& routing = meeting.routing;

    // (1) speaker bypass
    if (meeting.active_speaker) {
        const auto& s = *meeting.active_speaker;
        if (!meeting.contains(s)) report(K::speaker_bypass, "active speaker " + s + " is not a participant");
        if (routing.bypass.count(s) == 0) report(K::speaker_bypass, "active speaker " + s + " is not in bypass");
        for (const auto& r : routing.routes) {
            if (r.to == Route::To::participant && r.to_participant == s) {
                report(K::speaker_bypass, "active speaker " + s + " consumes pipeline " + std::to_string(r.from_pipeline));
            }
        }
    }

    // (2) minimal allocation
    std::map<LanguageTag, int> live_per_target;
    std::set<PipelineId> live;
    for (const auto& [id, p] : meeting.pipelines) {
        if (p.state == PipelineState::decommissioned) continue;
        live.insert(id);
        if (++live_per_target[p.target_language] == 2) {
            report(K::minimal_allocation, "more than one live pipeline targets " + p.target_language.code());
        }
    }
    std::set<PipelineId> mapped;
    for (const auto& [language, id] : routing.pipeline_map) mapped.insert(id);
    for (PipelineId id : live) {
        if (mapped.count(id) == 0) report(K::minimal_allocation, "live pipeline " + std::to_string(id) + " is not mapped");
    }
    if (meeting.active_speaker && meeting.contains(*meeting.active_speaker)) {
        const auto required = required_languages(meeting, *meeting.active_speaker, config);
        for (const auto& [language, id] : routing.pipeline_map) {
            if (required.count(language) == 0) {
                report(K::minimal_allocation, "pipeline for unrequired language " + language.code());
            }
        }
        std::size_t missing = 0;
        for (const auto& language : required) missing += routing.pipeline_map.count(language) == 0 ? 1 : 0;
        if (missing > 0 && !meeting.pool.exhausted()) {
            report(K::minimal_allocation, std::to_string(missing) + " required language(s) unserved with free pool slots");
        }
    } else if (!routing.pipeline_map.empty()) {
        report(K::minimal_allocation, "pipelines allocated with no active speaker");
    }

    // (3) no stale references
    auto check_ref = [&](PipelineId id, const std::string& where) {
        auto it = meeting.pipelines.find(id);
        if (it == meeting.pipelines.end()) {
            report(K::stale_pipeline, where + " references unknown pipeline " + std::to_string(id));
        } else if (it->second.state == PipelineState::decommissioned) {
            report(K::stale_pipeline, where + " references decommissioned pipeline " + std::to_string(id));
        }
    };
    for (const auto& [language, id] : routing.pipeline_map) check_ref(id, "pipeline map entry " + language.code());
    for (const auto& r : routing.routes) {
        if (r.from == Route::From::pipeline_output) check_ref(r.from_pipeline, "route");
        if (r.to == Route::To::pipeline_input) check_ref(r.to_pipeline, "route");
    }

    // pool conservation
    if (meeting.pool.allocated().size() > meeting.pool.capacity()) {
        report(K::pool_conservation, "pool over capacity");
    }
    if (meeting.pool.allocated() != mapped) {
        report(K::pool_conservation, "pool allocation differs from mapped pipelines");
    }

    // listener routing: one delivery per served listener
    for (const auto& [id, p] : meeting.participants) {
        if (meeting.active_speaker == id) continue;
        auto found = routing.pipeline_map.find(p.language);
        if (found == routing.pipeline_map.end()) continue;
        int deliveries = 0;
        for (const auto& r : routing.routes) {
            if (r.to == Route::To::participant && r.to_participant == id) {
                ++deliveries;
                if (r.from_pipeline != found->second) {
                    report(K::listener_routing, "listener " + id + " routed from the wrong pipeline");
                }
            }
        }
        if (deliveries != 1) {
            report(K::listener_routing, "listener " + id + " has " + std::to_string(deliveries) + " deliveries");
        }
    }
    return out;
}

} // namespace rtvt
