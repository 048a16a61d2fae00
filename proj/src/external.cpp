#include "rtvt/external.hpp"

#include "rtvt/errors.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include <spawn.h>
#include <sys/wait.h>

extern char** environ;

namespace rtvt {
namespace {

using Clock = std::chrono::steady_clock;

std::string shell_quote(const std::string& s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

std::string format_seconds(double s)
{
    std::ostringstream os;
    os.precision(10);
    os << s;
    return os.str();
}

void replace_all(std::string& s, const std::string& token, const std::string& value)
{
    for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos + value.size())) {
        s.replace(pos, token.size(), value);
    }
}

int run_shell(const std::string& command)
{
    pid_t pid = 0;
    std::string sh = "/bin/sh", flag = "-c", cmd = command;
    char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
    if (posix_spawn(&pid, "/bin/sh", nullptr, nullptr, argv, environ) != 0) return -1;
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) return -1;
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

struct JobOutcome {
    double start = 0.0;
    double finish = 0.0;
    int exit_code = 0;
};

double seconds_since(Clock::time_point origin)
{
    return std::chrono::duration<double>(Clock::now() - origin).count();
}

std::filesystem::path make_temp_dir()
{
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
        auto dir = std::filesystem::temp_directory_path() / ("rtvt_bench_" + std::to_string(rd()));
        if (std::filesystem::create_directory(dir)) return dir;
    }
    throw std::runtime_error("cannot create temporary work directory");
}

} // namespace

std::string expand_command(const std::string& command_template, const std::filesystem::path& in,
                           const std::filesystem::path& out, std::size_t index, double seconds)
{
    std::string cmd = command_template;
    replace_all(cmd, "{in}", shell_quote(in.string()));
    replace_all(cmd, "{out}", shell_quote(out.string()));
    replace_all(cmd, "{index}", std::to_string(index));
    replace_all(cmd, "{seconds}", format_seconds(seconds));
    return cmd;
}

ExternalRun run_external(const ExternalOptions& options)
{
    if (!(options.stream.total_duration > 0.0) || !(options.segment_duration > 0.0)) {
        throw DomainError("no segments");
    }
    if (options.workers == 0) throw DomainError("at least one worker is required");
    const auto plan = plan_segments(options.stream, options.segment_duration);

    const bool own_dir = options.workdir.empty();
    const auto dir = own_dir ? make_temp_dir() : options.workdir;
    if (!own_dir) std::filesystem::create_directories(dir);

    ExternalRun run;
    run.measurements.label = options.label;

    std::vector<std::future<JobOutcome>> futures(plan.size());
    std::vector<std::optional<JobOutcome>> outcomes(plan.size());
    JobQueue queue;
    const auto origin = Clock::now();

    auto collect_front = [&](bool block) {
        while (!queue.empty()) {
            auto& fut = futures[queue.front()];
            if (!block && fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) break;
            outcomes[queue.front()] = fut.get();
            queue.pop();
            if (block) break;
        }
    };
    auto first_failure = [&]() -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < outcomes.size(); ++k) {
            if (outcomes[k] && outcomes[k]->exit_code != 0) return k;
        }
        return std::nullopt;
    };

    for (std::size_t k = 0; k < plan.size() && !first_failure(); ++k) {
        const auto& seg = plan[k];
        std::this_thread::sleep_until(origin + std::chrono::duration_cast<Clock::duration>(
                                                   std::chrono::duration<double>(seg.available_at)));
        char name[32];
        std::snprintf(name, sizeof name, "seg_%05zu", k);
        const auto in_path = dir / name;
        const auto out_path = dir / (std::string(name) + ".out");
        {
            std::ofstream f(in_path, std::ios::binary);
            f << "segment " << k << " duration " << format_seconds(seg.duration) << '\n';
        }
        while (queue.size() >= options.workers) collect_front(true);

        const auto cmd = expand_command(options.command_template, in_path, out_path, k, seg.duration);
        futures[k] = std::async(std::launch::async, [cmd, origin] {
            JobOutcome o;
            o.start = seconds_since(origin);
            o.exit_code = run_shell(cmd);
            o.finish = seconds_since(origin);
            return o;
        });
        queue.enqueue(k);
        collect_front(false);
    }
    while (!queue.empty()) collect_front(true);

    run.failed_segment = first_failure();
    double prev_ready = 0.0;
    for (std::size_t k = 0; k < plan.size(); ++k) {
        if (!outcomes[k] || (run.failed_segment && k >= *run.failed_segment)) break;
        const auto& o = *outcomes[k];
        SegmentJob job;
        job.index = k;
        job.duration = plan[k].duration;
        job.capture_start = plan[k].capture_start;
        job.available_at = plan[k].available_at;
        job.start_at = o.start;
        job.finish_at = o.finish;
        job.processing = o.finish - o.start;
        job.ready_at = std::max(o.finish, prev_ready);
        prev_ready = job.ready_at;
        run.jobs.push_back(job);
        run.measurements.samples.push_back({job.duration, job.processing, static_cast<int>(k + 1)});
    }
    if (run.failed_segment) {
        run.error = "command failed on segment " + std::to_string(*run.failed_segment) + " (exit code " +
                    std::to_string(outcomes[*run.failed_segment]->exit_code) + ")";
    }
    run.report = compute_playback(run.jobs, wall_clock_tolerance);
    for (const auto& job : run.jobs) run.report.emission_order.push_back(job.index);
    if (!run.jobs.empty()) {
        double processing = 0.0, captured = 0.0;
        for (const auto& job : run.jobs) {
            processing += job.processing;
            captured += job.duration;
        }
        run.report.tau = processing / captured;
        run.report.viable = run.report.tau < 1.0;
    }

    if (own_dir) {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    return run;
}

} // namespace rtvt
