#include "rtvt/segproc.hpp"

#include "rtvt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtvt {

void JobQueue::enqueue(std::size_t index)
{
    if (!queue_.empty() && index <= queue_.back()) throw PreconditionError("job queue must stay index-ordered");
    queue_.push_back(index);
}

std::size_t JobQueue::pop()
{
    const std::size_t index = queue_.front();
    queue_.pop_front();
    return index;
}

Viability check_viability(const LatencyModel& model, double segment_duration)
{
    const double r = tau(model, segment_duration);
    return {r < 1.0, r};
}

std::vector<SegmentPlan> plan_segments(const StreamSpec& stream, double segment_duration)
{
    if (!(segment_duration > 0.0) || !std::isfinite(segment_duration)) {
        throw DomainError("segment duration must be positive");
    }
    if (!(stream.total_duration > 0.0) || !std::isfinite(stream.total_duration)) {
        throw DomainError("stream duration must be positive");
    }
    // A tail shorter than a nanosecond is rounding noise, not a segment.
    const auto count = static_cast<std::size_t>(
        std::max(1.0, std::ceil(stream.total_duration / segment_duration - scheduling_quantum)));
    std::vector<SegmentPlan> plan;
    plan.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double begin = static_cast<double>(k) * segment_duration;
        const double duration =
            k + 1 == count ? stream.total_duration - begin : segment_duration;
        SegmentPlan seg;
        seg.duration = duration;
        if (stream.mode == StreamMode::live) {
            seg.capture_start = begin;
            seg.available_at = k + 1 == count ? stream.total_duration : static_cast<double>(k + 1) * segment_duration;
        }
        plan.push_back(seg);
    }
    return plan;
}

Schedule schedule_segments(std::span<const SegmentPlan> plan, const LatencyModel& model, double segment_duration,
                           const ScheduleOptions& options)
{
    if (!(segment_duration > 0.0)) throw DomainError("segment duration must be positive");
    if (options.workers == 0) throw DomainError("at least one worker is required");

    Schedule out;
    auto& jobs = out.jobs;
    jobs.reserve(plan.size());

    std::vector<double> worker_free(options.workers, options.busy_until);
    std::vector<bool> worker_used(options.workers, false);
    JobQueue queue;
    double last_start = 0.0;

    for (std::size_t k = 0; k < plan.size(); ++k) {
        const auto& seg = plan[k];
        if (!(seg.duration > 0.0)) throw DomainError("segment durations must be positive");
        const auto w = static_cast<std::size_t>(
            std::min_element(worker_free.begin(), worker_free.end()) - worker_free.begin());

        SegmentJob job;
        job.index = k;
        job.duration = seg.duration;
        job.capture_start = seg.capture_start;
        job.available_at = seg.available_at;
        job.worker = w;
        job.start_at = std::max({seg.available_at, worker_free[w], k == 0 ? seg.available_at : last_start});
        job.cold_start = options.cold_start && !worker_used[w] && model.cold_start_extra() > 0.0;
        job.processing = evaluate(model, seg.duration) + (job.cold_start ? model.cold_start_extra() : 0.0);
        job.finish_at = job.start_at + job.processing;

        worker_free[w] = job.finish_at;
        worker_used[w] = true;
        last_start = job.start_at;
        queue.enqueue(k);
        jobs.push_back(job);
    }

    // Completions in time order; after each one, emit whatever is done at the front.
    std::vector<std::size_t> by_finish(jobs.size());
    std::iota(by_finish.begin(), by_finish.end(), std::size_t{0});
    std::stable_sort(by_finish.begin(), by_finish.end(),
                     [&](std::size_t l, std::size_t r) { return jobs[l].finish_at < jobs[r].finish_at; });
    std::vector<bool> done(jobs.size(), false);
    for (std::size_t i : by_finish) {
        done[i] = true;
        for (std::size_t e : queue.pop_done([&](std::size_t idx) { return done[idx]; })) {
            jobs[e].ready_at = jobs[i].finish_at;
            out.report.emission_order.push_back(e);
        }
    }

    auto emission = std::move(out.report.emission_order);
    out.report = compute_playback(jobs);
    out.report.emission_order = std::move(emission);
    const auto v = check_viability(model, segment_duration);
    out.report.tau = v.tau;
    out.report.viable = v.viable;
    return out;
}

Schedule schedule_stream(const StreamSpec& stream, const LatencyModel& model, double segment_duration,
                         std::size_t workers)
{
    const auto plan = plan_segments(stream, segment_duration);
    ScheduleOptions options;
    options.workers = workers;
    return schedule_segments(plan, model, segment_duration, options);
}

PlaybackReport compute_playback(std::span<const SegmentJob> jobs, double stall_tolerance)
{
    PlaybackReport report;
    if (jobs.empty()) return report;

    const auto& first = jobs.front();
    report.playback_start = first.ready_at;
    report.startup_delay =
        (first.start_at - first.available_at) + first.processing + (first.ready_at - first.finish_at);
    report.glass_latency = report.startup_delay + (first.available_at - first.capture_start);

    double offset = 0.0;
    double prev_play = 0.0;
    double prev_duration = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const auto& job = jobs[k];
        SegmentPlayback seg;
        seg.index = job.index;
        seg.ready = job.ready_at;
        seg.needed = report.playback_start + offset;
        if (k == 0) {
            seg.played_at = report.playback_start;
        } else {
            const double scheduled = prev_play + prev_duration;
            if (job.ready_at > scheduled + stall_tolerance) {
                seg.stall = job.ready_at - scheduled;
                seg.played_at = job.ready_at;
                ++report.stall_count;
                report.stall_total += seg.stall;
            } else {
                seg.played_at = std::max(scheduled, job.ready_at);
            }
        }
        seg.lag = seg.played_at - seg.needed;
        prev_play = seg.played_at;
        prev_duration = job.duration;
        offset += job.duration;
        report.per_segment.push_back(seg);
    }
    return report;
}

StageSnapshot stages_at(const Schedule& schedule, double time)
{
    StageSnapshot snap;
    for (std::size_t k = 0; k < schedule.jobs.size(); ++k) {
        const auto& job = schedule.jobs[k];
        if (job.capture_start <= time && time < job.available_at) snap.capturing = job.index;
        if (job.start_at <= time && time < job.finish_at) snap.processing.push_back(job.index);
        if (k < schedule.report.per_segment.size()) {
            const auto& play = schedule.report.per_segment[k];
            if (play.played_at <= time && time < play.played_at + job.duration) snap.playing = job.index;
        }
    }
    return snap;
}

} // namespace rtvt
