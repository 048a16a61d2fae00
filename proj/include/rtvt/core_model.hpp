#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rtvt {

/// Case-insensitive language identifier. The stored code is always lowercase,
/// so equality and ordering operate on the normalized form.
class LanguageTag {
public:
    LanguageTag() = default;
    explicit LanguageTag(std::string_view code);

    const std::string& code() const noexcept { return code_; }

    friend bool operator==(const LanguageTag&, const LanguageTag&) = default;
    friend std::strong_ordering operator<=>(const LanguageTag&, const LanguageTag&) = default;

private:
    std::string code_;
};

using ParticipantId = std::string;

struct Participant {
    ParticipantId id;
    LanguageTag language; // spoken language when active, target language when listening
};

using PipelineId = std::uint64_t;

enum class PipelineState { initializing, active, decommissioned };

const char* to_string(PipelineState state) noexcept;

struct PipelineInstance {
    PipelineId id = 0;
    LanguageTag source_language;
    LanguageTag target_language;
    PipelineState state = PipelineState::initializing;
};

/// Fixed number of pipeline slots; `allocated` never exceeds `capacity`.
class GpuPool {
public:
    GpuPool() = default;
    explicit GpuPool(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t free_slots() const noexcept { return capacity_ - allocated_.size(); }
    bool exhausted() const noexcept { return allocated_.size() >= capacity_; }
    const std::set<PipelineId>& allocated() const noexcept { return allocated_; }

    /// Claims a slot for `id`. Returns false when the pool is exhausted.
    bool acquire(PipelineId id);
    void release(PipelineId id);

    friend bool operator==(const GpuPool&, const GpuPool&) = default;

private:
    std::size_t capacity_ = 0;
    std::set<PipelineId> allocated_;
};

/// Cost of a single pipeline instance. Defaults to one dimensionless unit so
/// that costs read as "pipeline instances".
class CostModel {
public:
    CostModel() = default;
    explicit CostModel(double unit_cost);

    double unit_cost() const noexcept { return unit_cost_; }

private:
    double unit_cost_ = 1.0;
};

/// Every participant processing every other participant's stream: C * n * (n - 1).
/// Throws DomainError for n < 2.
double cost_naive(std::size_t n, const CostModel& c);

struct TokenCost {
    std::size_t k = 0;  // distinct target languages
    double cost = 0.0;  // C * k
    bool degenerate = false; // no listeners at all
};

/// One shared pipeline per distinct listener language.
TokenCost cost_token(const std::vector<LanguageTag>& listener_languages, const CostModel& c);

} // namespace rtvt
