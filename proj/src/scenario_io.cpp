#include "rtvt/scenario_io.hpp"

#include "rtvt/errors.hpp"
#include "rtvt/latency_io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace rtvt {
namespace {

using nlohmann::json;

ScenarioEvent::Kind parse_kind(const std::string& s)
{
    if (s == "speaker-change") return ScenarioEvent::Kind::speaker_change;
    if (s == "join") return ScenarioEvent::Kind::join;
    if (s == "leave") return ScenarioEvent::Kind::leave;
    if (s == "language-change") return ScenarioEvent::Kind::language_change;
    throw ParseError("unknown event kind '" + s + "'");
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "name", "participants", "pool_capacity", "unit_cost", "latency_model", "segment_duration",
        "run_duration", "seed", "workers", "literal_algorithm1", "fallback_to_raw", "events",
    };
    return keys;
}

json timeline_to_json(const LanguageTimeline& tl)
{
    return {
        {"turn", tl.turn},
        {"speaker", tl.speaker},
        {"source", tl.source.code()},
        {"target", tl.target.code()},
        {"pipeline", tl.pipeline},
        {"active_from", tl.active_from},
        {"active_to", tl.active_to},
        {"cold_start", tl.cold_start},
        {"segments", tl.segments},
        {"startup_delay", tl.startup_delay},
        {"glass_latency", tl.glass_latency},
        {"stall_count", tl.stall_count},
        {"stall_total", tl.stall_total},
    };
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace

Scenario scenario_from_json(const json& j)
{
    try {
        if (!j.is_object()) throw ParseError("scenario must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (known_keys().count(key) == 0) throw ParseError("unknown scenario key '" + key + "'");
        }
        Scenario s;
        s.name = j.value("name", std::string{});
        for (const auto& p : j.at("participants")) {
            s.participants.push_back({p.at("id").get<std::string>(), LanguageTag(p.at("language").get<std::string>())});
        }
        const auto capacity = j.at("pool_capacity").get<long long>();
        if (capacity < 0) throw ParseError("pool_capacity must be non-negative");
        s.pool_capacity = static_cast<std::size_t>(capacity);
        s.unit_cost = j.value("unit_cost", 1.0);

        const auto& model = j.at("latency_model");
        s.latency_model = model.is_string() ? reference_table_model(model.get<std::string>()) : model_from_json(model);

        if (j.contains("segment_duration")) {
            const auto& sd = j["segment_duration"];
            if (sd.is_string()) {
                if (sd.get<std::string>() != "auto") throw ParseError("segment_duration must be a number or \"auto\"");
            } else {
                s.segment_duration = sd.get<double>();
            }
        }
        s.run_duration = j.at("run_duration").get<double>();
        s.seed = j.value("seed", std::uint64_t{42});
        const auto workers = j.value("workers", 1LL);
        if (workers < 0) throw ParseError("workers must be non-negative");
        s.workers = static_cast<std::size_t>(workers);
        s.orchestrator.literal_algorithm1 = j.value("literal_algorithm1", false);
        s.orchestrator.fallback_to_raw = j.value("fallback_to_raw", false);

        if (j.contains("events")) {
            for (const auto& e : j["events"]) {
                ScenarioEvent ev;
                ev.time = e.at("time").get<double>();
                ev.kind = parse_kind(e.at("kind").get<std::string>());
                ev.id = e.at("id").get<std::string>();
                if (e.contains("language")) ev.language = LanguageTag(e["language"].get<std::string>());
                s.events.push_back(std::move(ev));
            }
        }
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid scenario JSON: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("invalid scenario JSON: ") + e.what());
    }
}

json scenario_to_json(const Scenario& s)
{
    json j;
    j["name"] = s.name;
    auto participants = json::array();
    for (const auto& p : s.participants) participants.push_back({{"id", p.id}, {"language", p.language.code()}});
    j["participants"] = participants;
    j["pool_capacity"] = s.pool_capacity;
    j["unit_cost"] = s.unit_cost;
    j["latency_model"] = model_to_json(s.latency_model);
    j["segment_duration"] = s.segment_duration ? json(*s.segment_duration) : json("auto");
    j["run_duration"] = s.run_duration;
    j["seed"] = s.seed;
    j["workers"] = s.workers;
    j["literal_algorithm1"] = s.orchestrator.literal_algorithm1;
    j["fallback_to_raw"] = s.orchestrator.fallback_to_raw;
    auto events = json::array();
    for (const auto& e : s.events) {
        json ev = {{"time", e.time}, {"kind", to_string(e.kind)}, {"id", e.id}};
        if (e.language) ev["language"] = e.language->code();
        events.push_back(ev);
    }
    j["events"] = events;
    return j;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string scenario_digest(const Scenario& scenario)
{
    const auto text = scenario_to_json(scenario).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json report_to_json(const RunReport& r)
{
    json j;
    j["scenario"] = {{"name", r.scenario_name}, {"digest", r.scenario_digest}, {"seed", r.seed}};
    j["segment"] = {
        {"seconds", r.segment.seconds},
        {"automatic", r.segment.automatic},
        {"viable", r.segment.viable},
        {"tau", r.segment.tau},
    };

    const auto& a = r.aggregates;
    j["aggregates"] = {
        {"max_k", a.max_k},
        {"mean_k", a.mean_k},
        {"total_stalls", a.total_stalls},
        {"total_stall_seconds", a.total_stall_seconds},
        {"allocation_failures", a.allocation_failures},
        {"allocations", a.allocations},
        {"decommissions", a.decommissions},
        {"reinitializations", a.reinitializations},
        {"cost_ratio", optional_number(a.cost_ratio)},
        {"max_cost_ratio", optional_number(a.max_cost_ratio)},
    };

    auto turns = json::array();
    for (const auto& t : r.turns) {
        turns.push_back({{"index", t.index}, {"speaker", t.speaker}, {"source", t.source.code()},
                         {"start", t.start}, {"end", t.end}});
    }
    j["turns"] = turns;

    auto timelines = json::array();
    for (const auto& tl : r.timelines) timelines.push_back(timeline_to_json(tl));
    j["timelines"] = timelines;

    json listeners = json::object();
    for (const auto& [id, l] : r.listeners) {
        listeners[id] = {
            {"stall_count", l.stall_count},
            {"stall_total", l.stall_total},
            {"translated_seconds", l.translated_seconds},
            {"bypass_seconds", l.bypass_seconds},
            {"unserved_seconds", l.unserved_seconds},
            {"startup_delays", l.startup_delays},
        };
    }
    j["listeners"] = listeners;

    auto metrics = json::array();
    for (const auto& m : r.metrics) {
        metrics.push_back({{"time_s", m.time},
                           {"participants", m.participants},
                           {"k", m.k},
                           {"token_cost", m.token_cost},
                           {"naive_cost", m.naive_cost},
                           {"alloc_failures", m.alloc_failures},
                           {"stalls_cum", m.stalls_cum}});
    }
    j["metrics"] = metrics;

    auto events = json::array();
    for (const auto& e : r.orchestration_events) {
        json ev = {{"kind", to_string(e.kind)}, {"time", e.time}};
        if (e.language) ev["language"] = e.language->code();
        if (e.pipeline) ev["pipeline"] = *e.pipeline;
        if (e.participant) ev["participant"] = *e.participant;
        if (e.reinitialized) ev["reinitialized"] = true;
        events.push_back(ev);
    }
    j["orchestration_events"] = events;
    j["warnings"] = r.warnings;
    return j;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsSample>& metrics)
{
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << metrics_csv_header << '\n' << std::setprecision(12);
    for (const auto& m : metrics) {
        out << m.time << ',' << m.k << ',' << m.token_cost << ',' << m.naive_cost << ',' << m.alloc_failures << ','
            << m.stalls_cum << '\n';
    }
    out.flags(flags);
    out.precision(prec);
}

} // namespace rtvt
