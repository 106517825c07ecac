#include "noisejector/eval/evaluator.hpp"

#include <fmt/format.h>

#include "noisejector/error.hpp"
#include "noisejector/eval/external.hpp"
#include "noisejector/eval/synthetic.hpp"

namespace noisejector::eval {

std::vector<RawEvaluation> Evaluator::evaluate_batch(std::span<const NoiseVector> batch) {
    std::vector<RawEvaluation> out;
    out.reserve(batch.size());
    for (const auto& z : batch) out.push_back(evaluate(z.span()));
    return out;
}

criterion::RawGradient Evaluator::gradient(std::span<const double>) {
    fail(ErrorCode::Unsupported, fmt::format("evaluator '{}' does not supply gradients", id()));
}

void Evaluator::check_dimension(std::span<const double> z) const {
    if (z.size() != dimension())
        fail(ErrorCode::DimensionMismatch,
             fmt::format("noise vector has {} entries, evaluator expects {}", z.size(), dimension()));
}

std::unique_ptr<Evaluator> open_evaluator(const std::string& locator) { return open_evaluator(locator, {}); }

std::unique_ptr<Evaluator> open_evaluator(const std::string& locator, const ExternalOptions& external) {
    constexpr std::string_view builtin = "builtin:";
    constexpr std::string_view exec = "exec:";
    const std::string_view text = locator;
    if (text.starts_with(builtin)) {
        const std::string_view rest = text.substr(builtin.size());
        const auto colon = rest.find(':');
        const std::string_view name = rest.substr(0, colon);
        const std::string_view options = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
        return open_builtin(parse_synthetic_spec(name, options));
    }
    if (text.starts_with(exec)) {
        const std::string command(text.substr(exec.size()));
        if (command.empty()) fail(ErrorCode::Usage, "exec: evaluator needs a command");
        return ExternalEvaluator::open(command, external);
    }
    fail(ErrorCode::Usage, fmt::format("evaluator '{}' must start with builtin: or exec:", locator));
}

}  // namespace noisejector::eval
