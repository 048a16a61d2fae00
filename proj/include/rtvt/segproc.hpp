#pragma once

#include "rtvt/latency.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace rtvt {

/// Two playback events closer than this are treated as simultaneous.
inline constexpr double scheduling_quantum = 1e-9;

/// Default stall tolerance for wall-clock runs (process spawn and timer jitter).
inline constexpr double wall_clock_tolerance = 0.05;

enum class StreamMode { live, batch };

struct StreamSpec {
    double total_duration = 0.0;
    StreamMode mode = StreamMode::live;
};

/// One slice of the input stream before processing.
struct SegmentPlan {
    double capture_start = 0.0;
    double duration = 0.0;
    double available_at = 0.0;
};

struct SegmentJob {
    std::size_t index = 0;
    double duration = 0.0;
    double capture_start = 0.0;
    double available_at = 0.0;
    double start_at = 0.0;
    double processing = 0.0; // p(duration), plus cold start when applicable
    double finish_at = 0.0;
    double ready_at = 0.0;   // emitted from the front of the FIFO
    std::size_t worker = 0;
    bool cold_start = false;
    bool failed = false;
};

/// FIFO of in-flight job indices. Results leave only from the front, so output
/// order equals submission order whatever order jobs complete in.
class JobQueue {
public:
    void enqueue(std::size_t index);
    bool empty() const noexcept { return queue_.empty(); }
    std::size_t size() const noexcept { return queue_.size(); }
    std::size_t front() const { return queue_.front(); }
    std::size_t pop();

    /// Pops and returns every leading index for which `done(index)` holds.
    template <typename Done>
    std::vector<std::size_t> pop_done(Done&& done)
    {
        std::vector<std::size_t> out;
        while (!queue_.empty() && done(queue_.front())) {
            out.push_back(queue_.front());
            queue_.pop_front();
        }
        return out;
    }

private:
    std::deque<std::size_t> queue_;
};

struct SegmentPlayback {
    std::size_t index = 0;
    double ready = 0.0;     // output available
    double needed = 0.0;    // nominal play time: playback_start + offset of the segment
    double played_at = 0.0; // actual play time after earlier pauses
    double stall = 0.0;     // pause inserted right before this segment
    double lag = 0.0;       // played_at - needed, cumulative
};

struct PlaybackReport {
    double startup_delay = 0.0;  // first availability to first playback
    double glass_latency = 0.0;  // capture start to first playback
    double playback_start = 0.0;
    std::size_t stall_count = 0;
    double stall_total = 0.0;
    double tau = 0.0;            // at the nominal segment duration
    bool viable = false;         // tau < 1
    std::vector<SegmentPlayback> per_segment;
    std::vector<std::size_t> emission_order;

    double final_lag() const noexcept { return per_segment.empty() ? 0.0 : per_segment.back().lag; }
};

struct Schedule {
    std::vector<SegmentJob> jobs;
    PlaybackReport report;
};

struct ScheduleOptions {
    std::size_t workers = 1;
    bool cold_start = true;    // apply the model's cold_start_extra to each worker's first job
    double busy_until = 0.0;   // workers are unavailable before this time
};

struct Viability {
    bool viable = false;
    double tau = 0.0;
};

/// tau(T) < 1, strictly.
Viability check_viability(const LatencyModel& model, double segment_duration);

/// Cuts a stream into segments of `segment_duration`; the tail may be shorter.
std::vector<SegmentPlan> plan_segments(const StreamSpec& stream, double segment_duration);

/// Virtual-clock schedule of the given segments on `options.workers` pipeline
/// slots. Jobs are dispatched in index order, start no earlier than their
/// availability, and leave through a FIFO so output order equals input order.
Schedule schedule_segments(std::span<const SegmentPlan> plan, const LatencyModel& model, double segment_duration,
                           const ScheduleOptions& options = {});

Schedule schedule_stream(const StreamSpec& stream, const LatencyModel& model, double segment_duration,
                         std::size_t workers = 1);

/// Playback of already-timed jobs (virtual or measured). Playback starts when the
/// first job is emitted; a later segment that is not ready when its predecessor
/// finishes playing pauses playback until it is. Lateness up to `stall_tolerance`
/// is absorbed without counting a stall.
PlaybackReport compute_playback(std::span<const SegmentJob> jobs, double stall_tolerance = scheduling_quantum);

struct StageSnapshot {
    std::optional<std::size_t> capturing;
    std::vector<std::size_t> processing;
    std::optional<std::size_t> playing;
};

/// Which segments are being captured, processed, and played at `time`.
StageSnapshot stages_at(const Schedule& schedule, double time);

} // namespace rtvt
