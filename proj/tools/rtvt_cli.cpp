// rtvt: calibration, T_opt analysis, meeting simulation, cost sweeps and
// external benchmarking for segmented multi-user translation pipelines.
//
// Exit codes: 0 success, 1 usage, 2 validation, 3 runtime.

#include "rtvt/errors.hpp"
#include "rtvt/external.hpp"
#include "rtvt/latency.hpp"
#include "rtvt/latency_io.hpp"
#include "rtvt/scenario_io.hpp"
#include "rtvt/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

enum ExitCode { ok = 0, usage = 1, validation = 2, runtime = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalOptions {
    std::uint64_t seed = 42;
    std::string format = "text";
    bool quiet = false;
};

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0.0)) throw std::invalid_argument(item);
            grid.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("invalid grid value '" + item + "'");
        }
    }
    if (grid.empty()) throw UsageError("grid must not be empty");
    return grid;
}

std::vector<std::size_t> parse_n_range(const std::string& text)
{
    auto to_count = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size() || v < 2) throw std::invalid_argument(s);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw UsageError("participant counts must be integers >= 2, got '" + s + "'");
        }
    };
    std::vector<std::size_t> out;
    if (auto colon = text.find(':'); colon != std::string::npos) {
        const auto lo = to_count(text.substr(0, colon));
        const auto hi = to_count(text.substr(colon + 1));
        if (hi < lo) throw UsageError("empty participant range '" + text + "'");
        for (auto n = lo; n <= hi; ++n) out.push_back(n);
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_count(item));
    }
    if (out.empty()) throw UsageError("no participant counts given");
    return out;
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

json model_summary(const rtvt::LatencyModel& model) { return rtvt::model_to_json(model); }

// --- calibrate ---------------------------------------------------------------

struct CalibrateArgs {
    std::string input;
    std::string form = "auto";
    std::string out;
    std::string label;
};

int cmd_calibrate(const CalibrateArgs& args, const GlobalOptions& g)
{
    const auto sets = rtvt::load_measurements_csv(args.input);
    if (sets.empty()) throw rtvt::InsufficientDataError("insufficient data: " + args.input + " has no measurement rows");

    const rtvt::MeasurementSet* chosen = nullptr;
    if (!args.label.empty()) {
        for (const auto& s : sets) {
            if (s.label == args.label) chosen = &s;
        }
        if (!chosen) throw rtvt::ValidationError({"label '" + args.label + "' not found in " + args.input});
    } else if (sets.size() == 1) {
        chosen = &sets.front();
    } else {
        std::string msg = "input holds several labels; pick one with --label:";
        for (const auto& s : sets) msg += " " + s.label;
        throw rtvt::ValidationError({msg});
    }

    std::optional<rtvt::FitResult> fit;
    std::optional<rtvt::LatencyModel> model;
    if (args.form == "affine") {
        fit = rtvt::fit(*chosen, rtvt::FitForm::affine);
    } else if (args.form == "log") {
        fit = rtvt::fit(*chosen, rtvt::FitForm::logarithmic);
    } else if (args.form == "table") {
        model = rtvt::table_model(*chosen);
    } else {
        fit = rtvt::fit_best(*chosen);
    }
    if (fit) model = fit->model;

    if (!args.out.empty()) rtvt::save_model_json(*model, args.out);
    if (g.quiet) return ok;

    const auto stats = chosen->aggregate();
    if (g.format == "json") {
        json j;
        j["label"] = chosen->label;
        j["model"] = model_summary(*model);
        if (fit) {
            j["rmse"] = fit->rmse;
            auto res = json::array();
            for (const auto& r : fit->residuals) {
                res.push_back({{"t", r.t}, {"observed", r.observed}, {"predicted", r.predicted}, {"residual", r.residual}});
            }
            j["residuals"] = res;
        }
        auto taus = json::array();
        for (const auto& s : stats) {
            taus.push_back({{"t", s.t}, {"p_mean", s.mean}, {"p_sd", s.stddev}, {"runs", s.runs}, {"tau", s.mean / s.t}});
        }
        j["tau_table"] = taus;
        std::cout << j.dump(2) << '\n';
        return ok;
    }
    if (g.format == "csv") {
        std::cout << "t_seconds,p_mean,p_model,residual,tau\n";
        for (const auto& s : stats) {
            const double predicted = rtvt::evaluate(*model, s.t);
            std::cout << s.t << ',' << s.mean << ',' << predicted << ',' << s.mean - predicted << ',' << s.mean / s.t << '\n';
        }
        return ok;
    }

    std::cout << "label: " << chosen->label << '\n';
    std::cout << "form: " << rtvt::to_string(model->form()) << '\n';
    if (model->form() != rtvt::LatencyModel::Form::table) {
        std::cout << "a: " << fmt(model->a(), 6) << "  b: " << fmt(model->b(), 6) << '\n';
    }
    if (fit) std::cout << "rmse: " << fmt(fit->rmse, 6) << " s\n";
    std::cout << "\n   t(s)   p mean    p model   residual   tau\n";
    for (const auto& s : stats) {
        const double predicted = rtvt::evaluate(*model, s.t);
        std::cout << std::setw(7) << s.t << std::setw(9) << fmt(s.mean) << std::setw(11) << fmt(predicted)
                  << std::setw(11) << fmt(s.mean - predicted, 3) << std::setw(8) << fmt(s.mean / s.t, 3) << '\n';
    }
    if (!args.out.empty()) std::cout << "\nmodel written to " << args.out << '\n';
    return ok;
}

// --- topt --------------------------------------------------------------------

struct ToptArgs {
    std::string model;
    bool continuous = false;
    std::string grid = "1,2,3,5,8";
    double search_max = rtvt::default_search_max;
};

int cmd_topt(const ToptArgs& args, const GlobalOptions& g)
{
    const auto grid = parse_grid(args.grid);
    const auto model = rtvt::load_model_json(args.model);
    const auto points = rtvt::throughput_points(model, grid);
    const auto discrete = rtvt::t_opt_discrete(points);
    std::optional<double> continuous;
    if (args.continuous) continuous = rtvt::t_opt_continuous(model, args.search_max);

    if (g.quiet) return ok;
    if (g.format == "json") {
        json j;
        auto pts = json::array();
        for (const auto& p : points) pts.push_back({{"t", p.t}, {"p", p.p}, {"tau", p.tau}, {"viable", p.tau < 1.0}});
        j["grid"] = pts;
        j["discrete"] = discrete ? json(*discrete) : json(nullptr);
        if (args.continuous) j["continuous"] = continuous ? json(*continuous) : json(nullptr);
        std::cout << j.dump(2) << '\n';
        return ok;
    }
    if (g.format == "csv") {
        std::cout << "t_seconds,p_seconds,tau\n";
        for (const auto& p : points) std::cout << p.t << ',' << p.p << ',' << p.tau << '\n';
        return ok;
    }
    std::cout << "   t(s)   p(s)     tau\n";
    for (const auto& p : points) {
        std::cout << std::setw(7) << p.t << std::setw(8) << fmt(p.p) << std::setw(8) << fmt(p.tau, 3)
                  << (p.tau < 1.0 ? "  real-time" : "  lag") << '\n';
    }
    std::cout << "T_opt (discrete): " << (discrete ? fmt(*discrete, 6) : std::string("none")) << '\n';
    if (args.continuous) {
        std::cout << "T_opt (continuous): " << (continuous ? fmt(*continuous, 6) : std::string("none")) << '\n';
    }
    return ok;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::string csv;
    std::string out;
};

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

int cmd_simulate(const SimulateArgs& args, const GlobalOptions& g)
{
    if (!args.csv.empty() && !args.out.empty() &&
        std::filesystem::weakly_canonical(args.csv) == std::filesystem::weakly_canonical(args.out)) {
        throw UsageError("--csv and --out must name different files");
    }
    auto scenario = rtvt::load_scenario(args.scenario);
    scenario.seed = g.seed;
    const auto report = rtvt::run_scenario(scenario);
    const auto text = rtvt::report_to_json(report).dump(2) + "\n";

    if (!args.out.empty()) write_text_file(args.out, text);
    if (!args.csv.empty()) {
        std::ostringstream os;
        rtvt::write_metrics_csv(os, report.metrics);
        write_text_file(args.csv, os.str());
    }
    if (g.quiet) return ok;
    if (g.format == "json") {
        if (args.out.empty()) std::cout << text;
        return ok;
    }
    if (g.format == "csv") {
        if (args.csv.empty()) rtvt::write_metrics_csv(std::cout, report.metrics);
        return ok;
    }

    const auto& a = report.aggregates;
    std::cout << "scenario: " << (report.scenario_name.empty() ? args.scenario : report.scenario_name) << " ("
              << report.scenario_digest << ")\n";
    std::cout << "segment duration: " << fmt(report.segment.seconds) << " s"
              << (report.segment.automatic ? " (auto)" : "") << ", tau = " << fmt(report.segment.tau, 3)
              << (report.segment.viable ? " (real-time)" : " (lag)") << '\n';
    std::cout << "pipelines: max k = " << a.max_k << ", mean k = " << fmt(a.mean_k) << '\n';
    std::cout << "cost ratio token/naive: " << (a.cost_ratio ? fmt(*a.cost_ratio, 6) : std::string("n/a")) << '\n';
    std::cout << "allocations: " << a.allocations << ", decommissions: " << a.decommissions
              << ", re-initializations: " << a.reinitializations << ", failures: " << a.allocation_failures << '\n';
    std::cout << "stalls: " << a.total_stalls << " (" << fmt(a.total_stall_seconds) << " s)\n";
    for (const auto& tl : report.timelines) {
        std::cout << "  turn " << tl.turn << " " << tl.source.code() << "->" << tl.target.code() << ": "
                  << tl.segments << " segments, startup " << fmt(tl.startup_delay) << " s, stalls "
                  << tl.stall_count << '\n';
    }
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return ok;
}

// --- sweep -------------------------------------------------------------------

struct SweepArgs {
    std::string n = "2:50";
    std::size_t langs = 4;
    std::string assignment = "uniform";
    std::size_t trials = 100;
    double cost = 1.0;
    std::string out;
};

int cmd_sweep(const SweepArgs& args, const GlobalOptions& g)
{
    rtvt::SweepOptions options;
    options.n_values = parse_n_range(args.n);
    options.language_pool = args.langs;
    options.assignment = args.assignment == "distinct" ? rtvt::Assignment::distinct
                         : args.assignment == "same" ? rtvt::Assignment::same
                                                     : rtvt::Assignment::uniform;
    options.cost = rtvt::CostModel(args.cost);
    options.trials = args.trials;
    options.seed = g.seed;
    const auto rows = rtvt::sweep_cost(options);

    std::ostringstream os;
    if (g.format == "json") {
        auto arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"n", r.n}, {"mean_k", r.mean_k}, {"stderr_k", r.stderr_k}, {"min_k", r.min_k},
                           {"max_k", r.max_k}, {"token_cost", r.token_cost}, {"naive_cost", r.naive_cost},
                           {"max_ratio", r.max_ratio}});
        }
        json j = {{"assignment", args.assignment}, {"langs", args.langs}, {"trials", args.trials},
                  {"seed", g.seed}, {"unit_cost", args.cost}, {"rows", arr}};
        os << j.dump(2) << '\n';
    } else if (g.format == "csv") {
        os << std::setprecision(12) << "n,mean_k,stderr_k,token_cost,naive_cost\n";
        for (const auto& r : rows) {
            os << r.n << ',' << r.mean_k << ',' << r.stderr_k << ',' << r.token_cost << ',' << r.naive_cost << '\n';
        }
    } else {
        os << "    N    mean k   stderr   token cost   naive cost\n";
        for (const auto& r : rows) {
            os << std::setw(5) << r.n << std::setw(10) << fmt(r.mean_k, 6) << std::setw(9) << fmt(r.stderr_k, 3)
               << std::setw(13) << fmt(r.token_cost, 6) << std::setw(13) << fmt(r.naive_cost, 8) << '\n';
        }
    }
    if (!args.out.empty()) {
        write_text_file(args.out, os.str());
    } else if (!g.quiet) {
        std::cout << os.str();
    }
    return ok;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
    std::string cmd;
    double stream_seconds = 30.0;
    double segment = 3.0;
    std::string label = "bench";
    std::size_t workers = 1;
    std::string mode = "live";
    std::string workdir;
    std::string out;
};

int cmd_bench(const BenchArgs& args, const GlobalOptions& g)
{
    rtvt::ExternalOptions options;
    options.command_template = args.cmd;
    options.stream = {args.stream_seconds, args.mode == "batch" ? rtvt::StreamMode::batch : rtvt::StreamMode::live};
    options.segment_duration = args.segment;
    options.label = args.label;
    options.workers = args.workers;
    options.workdir = args.workdir;
    const auto run = rtvt::run_external(options);

    std::ostringstream rows;
    rtvt::write_measurements_csv_header(rows);
    rtvt::write_measurements_csv_rows(rows, run.measurements);
    if (!args.out.empty()) {
        write_text_file(args.out, rows.str());
    } else {
        std::cout << rows.str();
    }
    if (!g.quiet) {
        std::cerr << "segments measured: " << run.measurements.samples.size() << ", startup "
                  << fmt(run.report.startup_delay) << " s, stalls " << run.report.stall_count << ", tau "
                  << fmt(run.report.tau, 3) << '\n';
    }
    if (!run.ok()) {
        std::cerr << "error: " << run.error << '\n';
        return runtime;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Segmented translation pipeline toolkit: calibrate, topt, simulate, sweep, bench"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}))->capture_default_str();
    app.add_flag("--quiet", g.quiet, "Suppress standard output reports");

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "Fit a latency model to measurement CSV");
    calibrate->add_option("--input", cal.input, "Measurement CSV")->required();
    calibrate->add_option("--form", cal.form, "Model form")->check(CLI::IsMember({"affine", "log", "table", "auto"}))->capture_default_str();
    calibrate->add_option("--out", cal.out, "Model JSON to write");
    calibrate->add_option("--label", cal.label, "Measurement label to fit");

    ToptArgs topt;
    auto* topt_cmd = app.add_subcommand("topt", "Optimal segment duration of a model");
    topt_cmd->add_option("--model", topt.model, "Model JSON")->required();
    topt_cmd->add_flag("--continuous", topt.continuous, "Also solve for the continuous tau = 1 crossing");
    topt_cmd->add_option("--grid", topt.grid, "Comma-separated durations")->capture_default_str();
    topt_cmd->add_option("--search-max", topt.search_max, "Upper bound of the continuous search")->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a meeting scenario");
    simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
    simulate->add_option("--csv", sim.csv, "Metrics CSV to write");
    simulate->add_option("--out", sim.out, "Report JSON to write");

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "Token versus naive cost over participant counts");
    sweep->add_option("--n", sw.n, "Range lo:hi or list")->capture_default_str();
    sweep->add_option("--langs", sw.langs, "Language pool size (uniform)")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--assignment", sw.assignment, "Language assignment")->check(CLI::IsMember({"uniform", "distinct", "same"}))->capture_default_str();
    sweep->add_option("--trials", sw.trials, "Trials per N")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--cost", sw.cost, "Unit pipeline cost")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--out", sw.out, "File to write the table to");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Time an external pipeline command per segment");
    bench_cmd->add_option("--cmd", bench.cmd, "Command template ({in} {out} {index} {seconds})")->required();
    bench_cmd->add_option("--stream-seconds", bench.stream_seconds, "Stream length")->check(CLI::NonNegativeNumber)->capture_default_str();
    bench_cmd->add_option("--segment", bench.segment, "Segment duration")->check(CLI::PositiveNumber)->capture_default_str();
    bench_cmd->add_option("--label", bench.label, "Label for the CSV rows")->capture_default_str();
    bench_cmd->add_option("--workers", bench.workers, "Concurrent jobs")->check(CLI::PositiveNumber)->capture_default_str();
    bench_cmd->add_option("--mode", bench.mode, "Segment arrival")->check(CLI::IsMember({"live", "batch"}))->capture_default_str();
    bench_cmd->add_option("--workdir", bench.workdir, "Directory for segment files");
    bench_cmd->add_option("--out", bench.out, "Measurement CSV to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? ok : usage;
    }

    try {
        if (*calibrate) return cmd_calibrate(cal, g);
        if (*topt_cmd) return cmd_topt(topt, g);
        if (*simulate) return cmd_simulate(sim, g);
        if (*sweep) return cmd_sweep(sw, g);
        if (*bench_cmd) return cmd_bench(bench, g);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const rtvt::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const rtvt::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const rtvt::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const rtvt::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime;
    }
    return usage;
}
