#include "rtvt/errors.hpp"

namespace rtvt {
namespace {

std::string join_violations(const std::vector<std::string>& violations)
{
    std::string out = "validation failed";
    for (const auto& v : violations) {
        out += "\n  - ";
        out += v;
    }
    return out;
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations))
{
}

} // namespace rtvt
