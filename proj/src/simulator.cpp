#include "rtvt/simulator.hpp"

#include "rtvt/errors.hpp"
#include "rtvt/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace rtvt {

const char* to_string(ScenarioEvent::Kind kind) noexcept
{
    switch (kind) {
    case ScenarioEvent::Kind::speaker_change: return "speaker-change";
    case ScenarioEvent::Kind::join: return "join";
    case ScenarioEvent::Kind::leave: return "leave";
    case ScenarioEvent::Kind::language_change: return "language-change";
    }
    return "unknown";
}

const char* to_string(Assignment a) noexcept
{
    switch (a) {
    case Assignment::uniform: return "uniform";
    case Assignment::distinct: return "distinct";
    case Assignment::same: return "same";
    }
    return "unknown";
}

namespace {

constexpr double eps = scheduling_quantum;
constexpr double unbounded = std::numeric_limits<double>::infinity();

int kind_rank(ScenarioEvent::Kind kind)
{
    switch (kind) {
    case ScenarioEvent::Kind::leave: return 0;
    case ScenarioEvent::Kind::join: return 1;
    case ScenarioEvent::Kind::language_change: return 2;
    case ScenarioEvent::Kind::speaker_change: return 3;
    }
    return 4;
}

std::string describe(const ScenarioEvent& e, std::size_t index)
{
    std::ostringstream os;
    os << "event #" << index << " (" << to_string(e.kind) << " '" << e.id << "' at t=" << e.time << ")";
    return os.str();
}

double naive_or_zero(std::size_t n, double unit_cost)
{
    return n < 2 ? 0.0 : unit_cost * static_cast<double>(n) * static_cast<double>(n - 1);
}

} // namespace

std::vector<std::size_t> application_order(const std::vector<ScenarioEvent>& events)
{
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const auto& a = events[l];
        const auto& b = events[r];
        if (a.time != b.time) return a.time < b.time;
        if (kind_rank(a.kind) != kind_rank(b.kind)) return kind_rank(a.kind) < kind_rank(b.kind);
        return a.id < b.id;
    });
    return order;
}

std::vector<std::string> validate_scenario(const Scenario& s)
{
    std::vector<std::string> v;
    if (!(s.run_duration > 0.0) || !std::isfinite(s.run_duration)) v.push_back("run_duration must be positive");
    if (!(s.unit_cost > 0.0)) v.push_back("unit_cost must be positive");
    if (s.segment_duration && !(*s.segment_duration > 0.0)) v.push_back("segment_duration must be positive");
    if (s.workers == 0) v.push_back("workers must be at least 1");

    std::set<ParticipantId> present;
    for (const auto& p : s.participants) {
        if (p.id.empty()) v.push_back("participant with empty id");
        if (!present.insert(p.id).second) v.push_back("duplicate participant id '" + p.id + "'");
    }

    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& e = s.events[i];
        if (!std::isfinite(e.time) || e.time < 0.0) v.push_back(describe(e, i) + ": time must be non-negative");
        if (e.time > s.run_duration) v.push_back(describe(e, i) + ": after run_duration");
        if (i > 0 && e.time < s.events[i - 1].time) v.push_back(describe(e, i) + ": events are not sorted by time");
        const bool needs_language =
            e.kind == ScenarioEvent::Kind::join || e.kind == ScenarioEvent::Kind::language_change;
        if (needs_language && !e.language) v.push_back(describe(e, i) + ": language is required");
    }

    for (std::size_t i : application_order(s.events)) {
        const auto& e = s.events[i];
        switch (e.kind) {
        case ScenarioEvent::Kind::join:
            if (!present.insert(e.id).second) v.push_back(describe(e, i) + ": participant already present");
            break;
        case ScenarioEvent::Kind::leave:
            if (present.erase(e.id) == 0) v.push_back(describe(e, i) + ": unknown participant");
            break;
        case ScenarioEvent::Kind::language_change:
        case ScenarioEvent::Kind::speaker_change:
            if (present.count(e.id) == 0) v.push_back(describe(e, i) + ": unknown participant");
            break;
        }
    }
    return v;
}

SegmentDurationChoice resolve_segment_duration(const LatencyModel& model, std::optional<double> requested)
{
    SegmentDurationChoice out;
    if (requested) {
        out.seconds = *requested;
    } else {
        out.automatic = true;
        if (model.form() == LatencyModel::Form::table) {
            std::vector<ThroughputPoint> pts;
            for (const auto& pt : model.points()) pts.push_back(ThroughputPoint::make(pt.t, pt.p));
            if (auto best = t_opt_discrete(pts)) {
                out.seconds = *best;
            } else {
                out.seconds = model.points().back().t;
                out.warning = "no tabulated duration reaches tau < 1; falling back to the largest (" +
                              std::to_string(out.seconds) + " s)";
            }
        } else if (auto crossing = t_opt_continuous(model)) {
            out.seconds = std::floor(*crossing * 100.0) / 100.0 + 0.01;
            while (tau(model, out.seconds) >= 1.0) out.seconds += 0.01;
        } else {
            out.seconds = model.valid_range() ? model.valid_range()->second : 8.0;
            out.warning = "model never reaches tau < 1; falling back to " + std::to_string(out.seconds) + " s";
        }
    }
    const auto v = check_viability(model, out.seconds);
    out.viable = v.viable;
    out.tau = v.tau;
    return out;
}

namespace {

struct Service {
    LanguageTag language;
    PipelineId pipeline = 0;
    double from = 0.0;
    double to = unbounded;
    bool cold = false;
    Schedule schedule;
};

enum class Via { pipeline, bypass, unserved };

struct Span {
    ParticipantId id;
    LanguageTag language;
    Via via = Via::unserved;
    double from = 0.0;
    double to = unbounded;
};

struct OpenTurn {
    TurnSummary summary;
    std::vector<Service> services;
    std::vector<Span> spans;
    std::size_t next_boundary = 1;
};

class Engine {
public:
    Engine(const Scenario& scenario, double segment_duration)
        : s_(scenario), T_(segment_duration), meeting_(scenario.pool_capacity)
    {
        for (const auto& p : s_.participants) meeting_.add_participant(p);
    }

    void run(RunReport& report)
    {
        const auto order = application_order(s_.events);
        if (order.empty() || s_.events[order.front()].time > 0.0) sample(0.0);
        // one sample per timestamp, after every event at that time has applied
        for (std::size_t n = 0; n < order.size(); ++n) {
            const auto& e = s_.events[order[n]];
            boundary_samples(e.time);
            apply(e);
            if (n + 1 == order.size() || s_.events[order[n + 1]].time != e.time) sample(e.time);
        }
        boundary_samples(s_.run_duration);
        if (turn_) close_turn(s_.run_duration);
        sample(s_.run_duration);
        finish(report);
    }

private:
    void apply(const ScenarioEvent& e)
    {
        const double t = e.time;
        const bool is_speaker = meeting_.active_speaker == e.id;
        switch (e.kind) {
        case ScenarioEvent::Kind::join:
            meeting_.add_participant({e.id, *e.language});
            if (meeting_.active_speaker) orchestrate(t);
            break;
        case ScenarioEvent::Kind::leave:
            meeting_.remove_participant(e.id);
            if (is_speaker) {
                close_turn(t);
                absorb(suspend_orchestration(meeting_, t));
            } else if (meeting_.active_speaker) {
                orchestrate(t);
            }
            break;
        case ScenarioEvent::Kind::language_change:
            meeting_.set_language(e.id, *e.language);
            if (is_speaker) {
                close_turn(t);
                orchestrate(t);
                open_turn(t);
            } else if (meeting_.active_speaker) {
                orchestrate(t);
            }
            break;
        case ScenarioEvent::Kind::speaker_change:
            if (is_speaker) {
                orchestrate(t);
            } else {
                if (turn_) close_turn(t);
                meeting_.active_speaker = e.id;
                orchestrate(t);
                open_turn(t);
            }
            if (meeting_.size() == 1) {
                std::ostringstream os;
                os << "speaker '" << e.id << "' has no listeners at t=" << t << " (k = 0)";
                warnings_.push_back(os.str());
            }
            break;
        }
        if (turn_) sync_turn(t);
    }

    void orchestrate(double t) { absorb(update_orchestration(meeting_, *meeting_.active_speaker, s_.orchestrator, t)); }

    void absorb(OrchestrationResult r)
    {
        meeting_ = std::move(r.meeting);
        using K = OrchestrationEvent::Kind;
        for (auto& ev : r.events) {
            if (ev.kind == K::pipeline_allocated || (ev.kind == K::pipeline_reused && ev.reinitialized)) {
                initialized_.insert(*ev.pipeline);
            }
            if (ev.kind == K::allocation_failed) {
                ++failures_;
                std::ostringstream os;
                os << "allocation failed for language '" << ev.language->code() << "' at t=" << ev.time;
                warnings_.push_back(os.str());
            }
            events_.push_back(std::move(ev));
        }
    }

    void open_turn(double t)
    {
        OpenTurn turn;
        turn.summary.index = turns_.size();
        turn.summary.speaker = *meeting_.active_speaker;
        turn.summary.source = meeting_.participant(turn.summary.speaker).language;
        turn.summary.start = t;
        turn_ = std::move(turn);
    }

    Via route_of(const ParticipantId& id) const
    {
        const auto& routing = meeting_.routing;
        if (routing.bypass.count(id)) return Via::bypass;
        const auto& lang = meeting_.participant(id).language;
        return routing.pipeline_map.count(lang) ? Via::pipeline : Via::unserved;
    }

    void sync_turn(double t)
    {
        auto& turn = *turn_;
        for (auto& svc : turn.services) {
            if (svc.to != unbounded) continue;
            auto it = meeting_.routing.pipeline_map.find(svc.language);
            if (it == meeting_.routing.pipeline_map.end() || it->second != svc.pipeline) svc.to = t;
        }
        for (const auto& [language, pipeline] : meeting_.routing.pipeline_map) {
            const bool open = std::any_of(turn.services.begin(), turn.services.end(), [&](const Service& svc) {
                return svc.to == unbounded && svc.pipeline == pipeline;
            });
            if (!open) {
                Service svc;
                svc.language = language;
                svc.pipeline = pipeline;
                svc.from = t;
                svc.cold = initialized_.count(pipeline) != 0;
                turn.services.push_back(std::move(svc));
            }
        }
        initialized_.clear();

        for (auto& span : turn.spans) {
            if (span.to != unbounded) continue;
            const bool gone = !meeting_.contains(span.id) || meeting_.active_speaker == span.id;
            if (gone || meeting_.participant(span.id).language != span.language || route_of(span.id) != span.via) {
                span.to = t;
            }
        }
        for (const auto& [id, p] : meeting_.participants) {
            if (meeting_.active_speaker == id) continue;
            const bool open = std::any_of(turn.spans.begin(), turn.spans.end(), [&](const Span& span) {
                return span.to == unbounded && span.id == id;
            });
            if (!open) turn.spans.push_back(Span{id, p.language, route_of(id), t, unbounded});
        }
    }

    std::vector<std::pair<double, double>> turn_segments(const OpenTurn& turn, double end) const
    {
        std::vector<std::pair<double, double>> out;
        for (std::size_t j = 0;; ++j) {
            const double begin = turn.summary.start + static_cast<double>(j) * T_;
            if (!(begin < end - eps)) break;
            out.emplace_back(begin, std::min(T_, end - begin));
        }
        return out;
    }

    void close_turn(double te)
    {
        if (!turn_) return;
        auto& turn = *turn_;
        turn.summary.end = te;
        for (auto& svc : turn.services) svc.to = std::min(svc.to, te);
        for (auto& span : turn.spans) span.to = std::min(span.to, te);
        const auto segments = turn_segments(turn, te);

        for (auto& svc : turn.services) {
            std::vector<SegmentPlan> plan;
            for (const auto& [begin, duration] : segments) {
                if (begin < svc.from - eps || !(begin < svc.to - eps)) continue;
                const double d = std::min(duration, svc.to - begin);
                plan.push_back({begin, d, begin + d});
            }
            if (plan.empty()) continue;
            ScheduleOptions options;
            options.workers = s_.workers;
            options.cold_start = svc.cold;
            options.busy_until = busy_until_[svc.pipeline];
            svc.schedule = schedule_segments(plan, s_.latency_model, T_, options);
            for (const auto& job : svc.schedule.jobs) {
                busy_until_[svc.pipeline] = std::max(busy_until_[svc.pipeline], job.finish_at);
            }

            LanguageTimeline tl;
            tl.turn = turn.summary.index;
            tl.speaker = turn.summary.speaker;
            tl.source = turn.summary.source;
            tl.target = svc.language;
            tl.pipeline = svc.pipeline;
            tl.active_from = svc.from;
            tl.active_to = svc.to;
            tl.cold_start = svc.cold;
            tl.segments = plan.size();
            tl.startup_delay = svc.schedule.report.startup_delay;
            tl.glass_latency = svc.schedule.report.glass_latency;
            tl.stall_count = svc.schedule.report.stall_count;
            tl.stall_total = svc.schedule.report.stall_total;
            timelines_.push_back(tl);
        }

        for (const auto& span : turn.spans) {
            const double length = span.to - span.from;
            if (!(length > eps)) continue;
            auto& totals = listeners_[span.id];
            if (span.via == Via::bypass) {
                totals.bypass_seconds += length;
                continue;
            }
            if (span.via == Via::unserved) {
                totals.unserved_seconds += length;
                continue;
            }
            totals.translated_seconds += length;
            auto svc = std::find_if(turn.services.begin(), turn.services.end(), [&](const Service& sv) {
                return sv.language == span.language && sv.from <= span.from + eps && span.to <= sv.to + eps;
            });
            if (svc == turn.services.end()) continue;
            // Late joiners start with the next emitted segment.
            std::vector<SegmentJob> heard;
            for (const auto& job : svc->schedule.jobs) {
                if (job.ready_at >= span.from - eps && job.capture_start < span.to - eps) heard.push_back(job);
            }
            if (heard.empty()) continue;
            const auto playback = compute_playback(heard);
            totals.stall_count += playback.stall_count;
            totals.stall_total += playback.stall_total;
            totals.startup_delays.push_back(playback.startup_delay);
            for (const auto& seg : playback.per_segment) {
                if (seg.stall > 0.0) stall_times_.push_back(seg.played_at - seg.stall);
            }
        }

        turns_.push_back(turn.summary);
        turn_.reset();
    }

    void boundary_samples(double until)
    {
        if (!turn_) return;
        auto& turn = *turn_;
        for (;; ++turn.next_boundary) {
            const double b = turn.summary.start + static_cast<double>(turn.next_boundary) * T_;
            if (!(b < until - eps)) break;
            sample(b);
        }
    }

    void sample(double t)
    {
        MetricsSample m;
        m.time = t;
        m.participants = meeting_.size();
        m.k = meeting_.active_pipeline_count();
        m.token_cost = s_.unit_cost * static_cast<double>(m.k);
        m.naive_cost = naive_or_zero(m.participants, s_.unit_cost);
        m.alloc_failures = failures_;
        metrics_.push_back(m);
    }

    void finish(RunReport& report)
    {
        std::sort(stall_times_.begin(), stall_times_.end());
        for (auto& m : metrics_) {
            m.stalls_cum = static_cast<std::size_t>(
                std::upper_bound(stall_times_.begin(), stall_times_.end(), m.time + eps) - stall_times_.begin());
        }

        auto& agg = report.aggregates;
        double k_integral = 0.0, token_integral = 0.0, naive_integral = 0.0;
        for (std::size_t i = 0; i < metrics_.size(); ++i) {
            const auto& m = metrics_[i];
            agg.max_k = std::max(agg.max_k, m.k);
            if (m.naive_cost > 0.0) {
                const double ratio = m.token_cost / m.naive_cost;
                agg.max_cost_ratio = std::max(agg.max_cost_ratio.value_or(0.0), ratio);
            }
            if (i + 1 < metrics_.size()) {
                const double dt = metrics_[i + 1].time - m.time;
                k_integral += static_cast<double>(m.k) * dt;
                token_integral += m.token_cost * dt;
                naive_integral += m.naive_cost * dt;
            }
        }
        agg.mean_k = k_integral / s_.run_duration;
        if (naive_integral > 0.0) agg.cost_ratio = token_integral / naive_integral;
        agg.allocation_failures = failures_;
        for (const auto& ev : events_) {
            using K = OrchestrationEvent::Kind;
            if (ev.kind == K::pipeline_allocated) ++agg.allocations;
            if (ev.kind == K::pipeline_decommissioned) ++agg.decommissions;
            if (ev.kind == K::pipeline_reused && ev.reinitialized) ++agg.reinitializations;
        }
        for (const auto& [id, totals] : listeners_) {
            agg.total_stalls += totals.stall_count;
            agg.total_stall_seconds += totals.stall_total;
            if (totals.unserved_seconds > 0.0) {
                std::ostringstream os;
                os << "listener '" << id << "' was unserved for " << totals.unserved_seconds << " s";
                warnings_.push_back(os.str());
            }
        }

        report.metrics = std::move(metrics_);
        report.turns = std::move(turns_);
        report.timelines = std::move(timelines_);
        report.listeners = std::move(listeners_);
        report.orchestration_events = std::move(events_);
        report.warnings.insert(report.warnings.end(), warnings_.begin(), warnings_.end());
    }

    const Scenario& s_;
    double T_;
    Meeting meeting_;
    std::optional<OpenTurn> turn_;
    std::set<PipelineId> initialized_;
    std::map<PipelineId, double> busy_until_;
    std::size_t failures_ = 0;

    std::vector<MetricsSample> metrics_;
    std::vector<TurnSummary> turns_;
    std::vector<LanguageTimeline> timelines_;
    std::map<ParticipantId, ListenerTotals> listeners_;
    std::vector<OrchestrationEvent> events_;
    std::vector<double> stall_times_;
    std::vector<std::string> warnings_;
};

} // namespace

RunReport run_scenario(const Scenario& scenario)
{
    if (auto violations = validate_scenario(scenario); !violations.empty()) {
        throw ValidationError(std::move(violations));
    }

    RunReport report;
    report.scenario_name = scenario.name;
    report.scenario_digest = scenario_digest(scenario);
    report.seed = scenario.seed;
    report.segment = resolve_segment_duration(scenario.latency_model, scenario.segment_duration);
    if (report.segment.warning) report.warnings.push_back(*report.segment.warning);
    if (!report.segment.viable) {
        std::ostringstream os;
        os << "segment duration " << report.segment.seconds << " s is not real-time viable (tau = "
           << report.segment.tau << "); playback will stall";
        report.warnings.push_back(os.str());
    }

    Engine engine(scenario, report.segment.seconds);
    engine.run(report);
    return report;
}

std::vector<SweepRow> sweep_cost(const SweepOptions& options)
{
    if (options.trials == 0) throw DomainError("sweep needs at least one trial");
    if (options.assignment == Assignment::uniform && options.language_pool == 0) {
        throw DomainError("uniform assignment needs a non-empty language pool");
    }
    std::mt19937_64 rng(options.seed);
    auto tag = [](std::size_t i) {
        std::string code = "lang";
        code += std::to_string(i);
        return LanguageTag(code);
    };

    std::vector<SweepRow> rows;
    for (std::size_t n : options.n_values) {
        if (n < 2) throw DomainError("sweep participant counts must be at least 2");
        SweepRow row;
        row.n = n;
        row.naive_cost = cost_naive(n, options.cost);
        row.min_k = std::numeric_limits<std::size_t>::max();
        double sum = 0.0, sum_sq = 0.0;
        std::uniform_int_distribution<std::size_t> pick(0, std::max<std::size_t>(options.language_pool, 1) - 1);

        for (std::size_t trial = 0; trial < options.trials; ++trial) {
            Meeting meeting(n);
            for (std::size_t i = 0; i < n; ++i) {
                LanguageTag language;
                switch (options.assignment) {
                case Assignment::uniform: language = tag(pick(rng)); break;
                case Assignment::distinct: language = tag(i); break;
                case Assignment::same: language = tag(i == 0 ? 0 : 1); break;
                }
                char id[32];
                std::snprintf(id, sizeof id, "p%05zu", i);
                meeting.add_participant({id, language});
            }
            const auto result = update_orchestration(meeting, meeting.participants.begin()->first);
            const auto k = result.meeting.active_pipeline_count();
            sum += static_cast<double>(k);
            sum_sq += static_cast<double>(k) * static_cast<double>(k);
            row.min_k = std::min(row.min_k, k);
            row.max_k = std::max(row.max_k, k);
            row.max_ratio = std::max(row.max_ratio, options.cost.unit_cost() * static_cast<double>(k) / row.naive_cost);
        }
        const auto trials = static_cast<double>(options.trials);
        row.mean_k = sum / trials;
        if (options.trials > 1) {
            const double var = std::max(0.0, (sum_sq - trials * row.mean_k * row.mean_k) / (trials - 1.0));
            row.stderr_k = std::sqrt(var / trials);
        }
        row.token_cost = options.cost.unit_cost() * row.mean_k;
        rows.push_back(row);
    }
    return rows;
}

} // namespace rtvt
