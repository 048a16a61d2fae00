#include "oracles.hpp"

#include "rtvt/errors.hpp"
#include "rtvt/latency_io.hpp"
#include "rtvt/scenario_io.hpp"
#include "rtvt/simulator.hpp"

#include <doctest.h>

#include <random>

using namespace rtvt;
using EK = ScenarioEvent::Kind;

namespace {

Participant person(const char* id, const char* lang) { return {id, LanguageTag(lang)}; }

ScenarioEvent speak(double t, const char* id) { return {t, EK::speaker_change, id, std::nullopt}; }

Scenario two_party()
{
    Scenario s;
    s.name = "two_party";
    s.participants = {person("A", "en"), person("B", "de")};
    s.pool_capacity = 2;
    s.latency_model = LatencyModel::affine(1.66, 0.21);
    s.segment_duration = 3.0;
    s.run_duration = 30.0;
    s.events = {speak(0, "A")};
    return s;
}

std::string dump(const RunReport& r) { return report_to_json(r).dump(2); }

// Random but valid meeting: joins, leaves, language changes and speaker turns.
Scenario random_scenario(std::mt19937_64& rng)
{
    const std::vector<std::string> alphabet = {"en", "de", "tr", "fr", "ja"};
    Scenario s;
    s.name = "random";
    s.latency_model = LatencyModel::affine(0.5 + (rng() % 100) / 100.0, (rng() % 120) / 100.0);
    s.segment_duration = 1.0 + (rng() % 40) / 10.0;
    s.pool_capacity = rng() % 6;
    s.run_duration = 60.0;
    std::vector<std::string> present;
    std::size_t next_id = 0;
    auto fresh = [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "u%02zu", next_id++);
        return std::string(buf);
    };
    const std::size_t initial = 2 + rng() % 6;
    for (std::size_t i = 0; i < initial; ++i) {
        present.push_back(fresh());
        s.participants.push_back({present.back(), LanguageTag(alphabet[rng() % alphabet.size()])});
    }
    double t = 0.0;
    s.events.push_back({0.0, EK::speaker_change, present[0], std::nullopt});
    while (true) {
        t += 0.5 * (1 + rng() % 12);
        if (t >= s.run_duration) break;
        const auto roll = rng() % 10;
        if (roll < 2 || present.empty()) {
            present.push_back(fresh());
            s.events.push_back({t, EK::join, present.back(), LanguageTag(alphabet[rng() % alphabet.size()])});
        } else if (roll < 3 && present.size() > 1) {
            const auto i = rng() % present.size();
            s.events.push_back({t, EK::leave, present[i], std::nullopt});
            present.erase(present.begin() + static_cast<long>(i));
        } else if (roll < 4) {
            s.events.push_back(
                {t, EK::language_change, present[rng() % present.size()], LanguageTag(alphabet[rng() % alphabet.size()])});
        } else {
            s.events.push_back({t, EK::speaker_change, present[rng() % present.size()], std::nullopt});
        }
    }
    return s;
}

} // namespace

TEST_CASE("two-party A100 meeting")
{
    const auto r = run_scenario(two_party());
    for (const auto& m : r.metrics) CHECK(m.k == 1);
    REQUIRE(r.listeners.count("B") == 1);
    const auto& b = r.listeners.at("B");
    REQUIRE(b.startup_delays.size() == 1);
    CHECK(b.startup_delays[0] == doctest::Approx(2.29));
    CHECK(b.stall_count == 0);
    CHECK(r.aggregates.total_stalls == 0);
    CHECK(r.aggregates.max_k == 1);
    CHECK(r.segment.seconds == 3.0);
    CHECK_FALSE(r.segment.automatic);
}

TEST_CASE("ten listeners sharing one language")
{
    Scenario s = two_party();
    s.participants = {person("A", "en")};
    for (int i = 0; i < 9; ++i) s.participants.push_back({"L" + std::to_string(i), LanguageTag("de")});
    s.pool_capacity = 4;
    const auto r = run_scenario(s);
    for (const auto& m : r.metrics) {
        CHECK(m.k == 1);
        CHECK(m.naive_cost == 90.0);
        CHECK(m.token_cost == 1.0);
    }
    REQUIRE(r.aggregates.cost_ratio.has_value());
    CHECK(*r.aggregates.cost_ratio == doctest::Approx(1.0 / 90.0));
}

TEST_CASE("alternating speakers on a two-slot pool")
{
    const auto s = load_scenario(RTVT_SCENARIO_DIR "/alternating_3.json");
    const auto r = run_scenario(s);
    for (const auto& m : r.metrics) CHECK(m.k == 2);
    CHECK(r.aggregates.allocation_failures == 0);
    CHECK(r.aggregates.reinitializations == 3);
    CHECK(r.turns.size() == 4);
    std::size_t reinit_events = 0;
    for (const auto& e : r.orchestration_events)
        if (e.kind == OrchestrationEvent::Kind::pipeline_reused && e.reinitialized) ++reinit_events;
    CHECK(reinit_events == 3);
}

TEST_CASE("token cost equals C times k at every sample")
{
    auto s = two_party();
    s.unit_cost = 2.5;
    s.participants.push_back(person("C", "fr"));
    s.events.push_back(speak(10, "C"));
    const auto r = run_scenario(s);
    for (const auto& m : r.metrics) CHECK(m.token_cost == 2.5 * static_cast<double>(m.k));
}

TEST_CASE("validation lists every violation")
{
    Scenario s = two_party();
    s.run_duration = 0;
    s.participants.push_back(person("A", "fr"));
    s.events = {speak(5, "A"), speak(2, "Z"), {3, EK::join, "B", LanguageTag("fr")}};
    const auto problems = validate_scenario(s);
    CHECK(problems.size() >= 4);
    try {
        run_scenario(s);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.violations() == problems);
    }
    CHECK(validate_scenario(two_party()).empty());
}

TEST_CASE("speaker must be present when the turn starts")
{
    Scenario s = two_party();
    s.events = {speak(0, "A"), {5, EK::leave, "B", std::nullopt}, speak(6, "B")};
    CHECK_FALSE(validate_scenario(s).empty());
}

TEST_CASE("application order for simultaneous events")
{
    const std::vector<ScenarioEvent> events = {
        speak(1, "A"),
        {1, EK::join, "Z", LanguageTag("fr")},
        {1, EK::leave, "C", std::nullopt},
        {1, EK::language_change, "B", LanguageTag("de")},
        {1, EK::join, "Y", LanguageTag("fr")},
        {0, EK::speaker_change, "B", std::nullopt},
    };
    CHECK(application_order(events) == std::vector<std::size_t>{5, 2, 4, 1, 3, 0});
}

TEST_CASE("segment duration resolution")
{
    const auto a100 = resolve_segment_duration(reference_table_model("A100"), std::nullopt);
    CHECK(a100.automatic);
    CHECK(a100.seconds == 3.0);
    CHECK(a100.viable);
    CHECK_FALSE(a100.warning);

    const auto t4 = resolve_segment_duration(reference_table_model("T4"), std::nullopt);
    CHECK(t4.seconds == 8.0);
    CHECK_FALSE(t4.viable);
    CHECK(t4.warning.has_value());

    const auto affine = resolve_segment_duration(LatencyModel::affine(1.66, 0.21), std::nullopt);
    CHECK(affine.seconds == doctest::Approx(2.11));
    CHECK(affine.viable);

    const auto never = resolve_segment_duration(LatencyModel::affine(1, 1.2), std::nullopt);
    CHECK_FALSE(never.viable);
    CHECK(never.warning.has_value());

    const auto fixed = resolve_segment_duration(LatencyModel::affine(1, 0.5), 4.0);
    CHECK_FALSE(fixed.automatic);
    CHECK(fixed.seconds == 4.0);
    CHECK(fixed.tau == doctest::Approx(0.75));
}

TEST_CASE("mid-turn speaker change truncates into a partial segment")
{
    Scenario s = two_party();
    s.participants.push_back(person("C", "fr"));
    s.events.push_back(speak(10, "C"));
    const auto r = run_scenario(s);
    REQUIRE(r.turns.size() == 2);
    CHECK(r.turns[0].end == 10.0);
    const auto first = std::find_if(r.timelines.begin(), r.timelines.end(),
                                    [](const LanguageTimeline& t) { return t.turn == 0; });
    REQUIRE(first != r.timelines.end());
    CHECK(first->segments == 4); // 3 + 3 + 3 + 1
}

TEST_CASE("replay is byte-identical")
{
    for (const char* name : {"bilingual_10", "worst_case_6", "alternating_3", "dynamic_meeting", "t4_lag"}) {
        CAPTURE(name);
        const auto s = load_scenario(std::string(RTVT_SCENARIO_DIR) + "/" + name + ".json");
        CHECK(dump(run_scenario(s)) == dump(run_scenario(s)));
    }
}

TEST_CASE("random meetings respect the k bound and counterfactual dominance")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 150; ++trial) {
        const auto s = random_scenario(rng);
        REQUIRE(validate_scenario(s).empty());
        const auto r = run_scenario(s);
        for (const auto& m : r.metrics) {
            const std::size_t bound = m.participants == 0 ? 0 : std::min(s.pool_capacity, m.participants - 1);
            CHECK(m.k <= bound);
            if (m.k >= 1) CHECK(m.naive_cost / m.token_cost >= static_cast<double>(m.participants) - 1e-9);
            CHECK(m.token_cost == s.unit_cost * static_cast<double>(m.k));
        }
        if (r.aggregates.cost_ratio) CHECK(*r.aggregates.cost_ratio <= 1.0);
        CHECK(dump(r) == dump(run_scenario(s)));
    }
}

TEST_CASE("permuting simultaneous independent events leaves k unchanged")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        Scenario s = two_party();
        s.pool_capacity = 6;
        s.participants = {person("A", "en"), person("B", "de"), person("C", "fr"), person("D", "tr")};
        s.events = {speak(0, "A"),
                    {6, EK::join, "E", LanguageTag("ja")},
                    {6, EK::leave, "C", std::nullopt},
                    {6, EK::language_change, "D", LanguageTag("es")},
                    speak(6, "B")};
        auto shuffled = s;
        std::shuffle(shuffled.events.begin() + 1, shuffled.events.end(), rng);
        const auto a = run_scenario(s);
        const auto b = run_scenario(shuffled);
        CHECK(a.metrics.back().k == b.metrics.back().k);
        CHECK(a.metrics.back().k == 3);
    }
}

TEST_CASE("speaker leaving suspends every pipeline")
{
    Scenario s = two_party();
    s.participants.push_back(person("C", "fr"));
    s.events = {speak(0, "A"), {9, EK::leave, "A", std::nullopt}, speak(15, "B")};
    const auto r = run_scenario(s);
    for (const auto& m : r.metrics) {
        if (m.time > 9.0 && m.time < 15.0) CHECK(m.k == 0);
    }
    CHECK(r.metrics.back().k == 1);
}

TEST_CASE("a lone speaker is a warning, not an error")
{
    Scenario s = two_party();
    s.participants = {person("A", "en")};
    const auto r = run_scenario(s);
    CHECK(r.aggregates.max_k == 0);
    CHECK(std::any_of(r.warnings.begin(), r.warnings.end(),
                      [](const std::string& w) { return w.find("no listeners") != std::string::npos; }));
}

TEST_CASE("metrics CSV")
{
    std::ostringstream out;
    write_metrics_csv(out, run_scenario(two_party()).metrics);
    const auto text = out.str();
    CHECK(text.rfind("time_s,k,token_cost,naive_cost,alloc_failures,stalls_cum\n", 0) == 0);
}

TEST_CASE("scenario JSON round trip and unknown keys")
{
    const auto s = load_scenario(RTVT_SCENARIO_DIR "/dynamic_meeting.json");
    const auto back = scenario_from_json(scenario_to_json(s));
    CHECK(scenario_digest(back) == scenario_digest(s));
    auto j = scenario_to_json(s);
    j["colour"] = "blue";
    CHECK_THROWS_AS(scenario_from_json(j), ParseError);
}

TEST_CASE("sweep extremes")
{
    SweepOptions distinct;
    for (std::size_t n = 2; n <= 20; ++n) distinct.n_values.push_back(n);
    distinct.assignment = Assignment::distinct;
    distinct.cost = CostModel(1.5);
    distinct.trials = 3;
    for (const auto& row : sweep_cost(distinct)) {
        CHECK(row.token_cost == 1.5 * static_cast<double>(row.n - 1));
        CHECK(row.naive_cost == 1.5 * static_cast<double>(row.n * (row.n - 1)));
        CHECK(row.min_k == row.n - 1);
        CHECK(row.max_k == row.n - 1);
        CHECK(row.max_ratio <= 1.0 / static_cast<double>(row.n) + 1e-15);
    }

    auto same = distinct;
    same.assignment = Assignment::same;
    for (const auto& row : sweep_cost(same)) {
        CHECK(row.token_cost == 1.5);
        CHECK(row.mean_k == 1.0);
    }
}

TEST_CASE("uniform sweep matches the occupancy expectation")
{
    CHECK(oracle::expected_k_uniform(50, 4) == doctest::Approx(2.999997734713374).epsilon(1e-12));
    CHECK(oracle::expected_k_uniform(2, 4) == doctest::Approx(0.75));
    CHECK(oracle::variance_k_uniform(2, 4) == doctest::Approx(0.1875));

    SweepOptions opt;
    opt.n_values = {3, 5, 50};
    opt.language_pool = 4;
    opt.trials = 1000;
    opt.seed = 42;
    for (const auto& row : sweep_cost(opt)) {
        CAPTURE(row.n);
        const double expected = oracle::expected_k_uniform(row.n, 4);
        CHECK(row.mean_k <= 3.0);
        const double se = std::sqrt(oracle::variance_k_uniform(row.n, 4) / static_cast<double>(opt.trials));
        CHECK(std::abs(row.mean_k - expected) <= 3.0 * se);
    }
    const auto again = sweep_cost(opt);
    CHECK(again[2].mean_k == sweep_cost(opt)[2].mean_k);
}
