#include "rtvt/errors.hpp"
#include "rtvt/external.hpp"
#include "rtvt/latency.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace rtvt;

TEST_CASE("command expansion quotes arguments")
{
    const auto cmd = expand_command("proc {in} > {out} # {index} {seconds}", "/tmp/a b/seg", "/tmp/o'ut", 3, 2.5);
    CHECK(cmd == "proc '/tmp/a b/seg' > '/tmp/o'\\''ut' # 3 2.5");
}

TEST_CASE("sleep stub measures its own duration")
{
    ExternalOptions opt;
    opt.command_template = "sleep 0.3";
    opt.stream = {1.2, StreamMode::live};
    opt.segment_duration = 0.6;
    opt.label = "stub";
    const auto run = run_external(opt);
    REQUIRE(run.ok());
    REQUIRE(run.measurements.samples.size() == 2);
    CHECK(run.measurements.label == "stub");
    for (const auto& s : run.measurements.samples) {
        CHECK(s.t == doctest::Approx(0.6));
        CHECK(s.p >= 0.3);
        CHECK(s.p < 0.55);
    }
    CHECK(run.measurements.samples[0].run == 1);
    CHECK(run.measurements.samples[1].run == 2);
    CHECK(run.report.stall_count == 0);
    CHECK(run.report.viable);
    CHECK(run.report.emission_order == std::vector<std::size_t>{0, 1});
}

TEST_CASE("segment files are materialized")
{
    const auto dir = std::filesystem::temp_directory_path() / "rtvt_external_test";
    std::filesystem::remove_all(dir);
    ExternalOptions opt;
    opt.command_template = "cp {in} {out}";
    opt.stream = {0.4, StreamMode::batch};
    opt.segment_duration = 0.2;
    opt.workdir = dir;
    const auto run = run_external(opt);
    REQUIRE(run.ok());
    CHECK(std::filesystem::exists(dir / "seg_00000"));
    CHECK(std::filesystem::exists(dir / "seg_00001"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("failure keeps earlier measurements")
{
    ExternalOptions opt;
    opt.command_template = "test {index} -lt 2";
    opt.stream = {0.5, StreamMode::batch};
    opt.segment_duration = 0.1;
    const auto run = run_external(opt);
    CHECK_FALSE(run.ok());
    REQUIRE(run.failed_segment.has_value());
    CHECK(*run.failed_segment == 2);
    CHECK(run.measurements.samples.size() == 2);
    CHECK_FALSE(run.error.empty());
}

TEST_CASE("empty stream has no segments")
{
    ExternalOptions opt;
    opt.command_template = "true";
    opt.stream = {0.0, StreamMode::live};
    opt.segment_duration = 1.0;
    CHECK_THROWS_WITH_AS(run_external(opt), doctest::Contains("no segments"), DomainError);
}
