#pragma once

#include "rtvt/latency.hpp"
#include "rtvt/segproc.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rtvt {

/// Real-wall-clock counterpart of schedule_stream: each segment is written to
/// `<workdir>/seg_%05d` and handed to an external command.
///
/// The command template is run through `/bin/sh -c` after substituting these
/// tokens (values are shell-quoted):
///   {in}       segment input file
///   {out}      path the command may write its output to
///   {index}    0-based segment index
///   {seconds}  segment duration
struct ExternalOptions {
    std::string command_template;
    StreamSpec stream;
    double segment_duration = 0.0;
    std::string label = "external";
    std::size_t workers = 1;
    std::filesystem::path workdir; // empty: a temporary directory, removed afterwards
};

struct ExternalRun {
    MeasurementSet measurements;    // successful segments before the first failure
    std::vector<SegmentJob> jobs;   // times in seconds since the run started
    PlaybackReport report;
    std::optional<std::size_t> failed_segment;
    std::string error;

    bool ok() const noexcept { return !failed_segment; }
};

/// Expands the template tokens; exposed for testing.
std::string expand_command(const std::string& command_template, const std::filesystem::path& in,
                           const std::filesystem::path& out, std::size_t index, double seconds);

/// Throws DomainError("no segments") for an empty stream or a non-positive
/// segment duration. A failing command does not throw: the run stops
/// dispatching, drains in-flight jobs, and reports the failed segment.
ExternalRun run_external(const ExternalOptions& options);

} // namespace rtvt
