#include "oracles.hpp"

#include "rtvt/core_model.hpp"
#include "rtvt/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace rtvt;

TEST_CASE("language tags normalize case")
{
    CHECK(LanguageTag("EN") == LanguageTag("en"));
    CHECK(LanguageTag(" De ").code() == "de");
    CHECK(LanguageTag("de") < LanguageTag("en"));
    CHECK_THROWS_AS(LanguageTag(""), DomainError);
    CHECK_THROWS_AS(LanguageTag("   "), DomainError);
}

TEST_CASE("gpu pool never exceeds capacity")
{
    GpuPool pool(2);
    CHECK(pool.acquire(1));
    CHECK(pool.acquire(2));
    CHECK_FALSE(pool.acquire(3));
    CHECK(pool.exhausted());
    pool.release(1);
    CHECK(pool.free_slots() == 1);
    CHECK(pool.acquire(3));
    CHECK(pool.allocated() == std::set<PipelineId>{2, 3});

    GpuPool empty(0);
    CHECK_FALSE(empty.acquire(1));
}

TEST_CASE("cost model rejects non-positive unit cost")
{
    CHECK_THROWS_AS(CostModel(0.0), DomainError);
    CHECK_THROWS_AS(CostModel(-1.0), DomainError);
    CHECK(CostModel().unit_cost() == 1.0);
}

TEST_CASE("naive cost matches ordered pair enumeration")
{
    // frozen from oracle::ordered_pairs
    CHECK(oracle::ordered_pairs(2) == 2);
    CHECK(oracle::ordered_pairs(5) == 20);
    CHECK(oracle::ordered_pairs(10) * 2.5 == doctest::Approx(225.0));

    CHECK(cost_naive(2, CostModel(1.0)) == 2.0);
    CHECK(cost_naive(5, CostModel(1.0)) == 20.0);
    CHECK(cost_naive(10, CostModel(2.5)) == 225.0);
    for (std::size_t n = 2; n <= 40; ++n) {
        CHECK(cost_naive(n, CostModel()) == static_cast<double>(oracle::ordered_pairs(n)));
    }
    CHECK_THROWS_AS(cost_naive(1, CostModel()), DomainError);
    CHECK_THROWS_AS(cost_naive(0, CostModel()), DomainError);
}

TEST_CASE("naive cost grows quadratically")
{
    const CostModel c(1.5);
    for (std::size_t n = 3; n <= 100; ++n) {
        CHECK(cost_naive(n, c) - cost_naive(n - 1, c) == doctest::Approx(2.0 * 1.5 * static_cast<double>(n - 1)));
    }
}

TEST_CASE("token cost counts distinct listener languages")
{
    auto tags = [](std::initializer_list<const char*> codes) {
        std::vector<LanguageTag> out;
        for (auto c : codes) out.emplace_back(c);
        return out;
    };
    auto one = cost_token(tags({"en"}), CostModel());
    CHECK(one.k == 1);
    CHECK(one.cost == 1.0);

    auto mixed = cost_token(tags({"en", "de", "tr", "en"}), CostModel());
    CHECK(mixed.k == 3);
    CHECK(mixed.cost == 3.0);

    auto distinct = cost_token(tags({"a", "b", "c", "d", "e", "f", "g", "h", "i"}), CostModel());
    CHECK(distinct.k == 9);
    CHECK(distinct.cost == 9.0);

    auto none = cost_token({}, CostModel());
    CHECK(none.k == 0);
    CHECK(none.cost == 0.0);
    CHECK(none.degenerate);
}

TEST_CASE("token cost is permutation and case invariant, bounded by naive/n")
{
    std::mt19937_64 rng(7);
    const std::vector<std::string> alphabet = {"en", "EN", "de", "De", "tr", "fr", "es", "Ja"};
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<std::string> raw;
        for (std::size_t i = 0; i + 1 < n; ++i) raw.push_back(alphabet[rng() % alphabet.size()]);
        std::vector<LanguageTag> listeners;
        for (const auto& r : raw) listeners.emplace_back(r);

        const auto base = cost_token(listeners, CostModel());
        std::shuffle(listeners.begin(), listeners.end(), rng);
        std::vector<LanguageTag> upper;
        for (const auto& r : raw) {
            std::string u = r;
            for (auto& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            upper.emplace_back(u);
        }
        CHECK(cost_token(listeners, CostModel()).k == base.k);
        CHECK(cost_token(upper, CostModel()).k == base.k);

        std::set<std::string> brute;
        for (const auto& r : raw) brute.insert(oracle::lower(r));
        CHECK(base.k == brute.size());
        CHECK(base.cost <= static_cast<double>(n - 1));
        CHECK(base.cost / cost_naive(n, CostModel()) <= 1.0 / static_cast<double>(n) + 1e-15);
    }
}
