#include "rtvt/core_model.hpp"

#include "rtvt/errors.hpp"

#include <algorithm>
#include <cctype>

namespace rtvt {

LanguageTag::LanguageTag(std::string_view code)
{
    code_.reserve(code.size());
    for (char ch : code) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        code_.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (code_.empty()) throw DomainError("language tag must not be empty");
}

const char* to_string(PipelineState state) noexcept
{
    switch (state) {
    case PipelineState::initializing: return "initializing";
    case PipelineState::active: return "active";
    case PipelineState::decommissioned: return "decommissioned";
    }
    return "unknown";
}

bool GpuPool::acquire(PipelineId id)
{
    if (exhausted()) return false;
    allocated_.insert(id);
    return true;
}

void GpuPool::release(PipelineId id) { allocated_.erase(id); }

CostModel::CostModel(double unit_cost) : unit_cost_(unit_cost)
{
    if (!(unit_cost > 0.0)) throw DomainError("unit cost must be positive");
}

double cost_naive(std::size_t n, const CostModel& c)
{
    if (n < 2) throw DomainError("invalid meeting size: cost model needs at least 2 participants");
    const auto nd = static_cast<double>(n);
    return c.unit_cost() * nd * (nd - 1.0);
}

TokenCost cost_token(const std::vector<LanguageTag>& listener_languages, const CostModel& c)
{
    std::set<LanguageTag> distinct(listener_languages.begin(), listener_languages.end());
    TokenCost out;
    out.k = distinct.size();
    out.cost = c.unit_cost() * static_cast<double>(out.k);
    out.degenerate = listener_languages.empty();
    return out;
}

} // namespace rtvt
