#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace labelforge::prompt {

using Tokenizer = std::function<std::size_t(std::string_view)>;

/// ceil(bytes / 4)
std::size_t heuristic_tokens(std::string_view text);

struct Pricing {
    std::optional<double> input_rate;   // dollars per `unit_tokens` input tokens
    std::optional<double> output_rate;  // dollars per `unit_tokens` output tokens
    double unit_tokens = 1000.0;

    /// {"input_per_1k": x, "output_per_1k": y} or {"input_per_1m", "output_per_1m"}.
    static Pricing from_json(const nlohmann::json& j);
};

struct CostEstimate {
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    double price_per_unit_input = 0.0;
    double price_per_unit_output = 0.0;
    double unit_tokens = 1000.0;
    double dollars = 0.0;
};

/// Throws ValidationError if a rate is missing.
CostEstimate estimate_cost(std::span<const std::string> texts_in, std::span<const std::string> texts_out,
                           const Pricing& pricing, const Tokenizer& tokenizer = heuristic_tokens);

nlohmann::ordered_json cost_to_json(const CostEstimate& c);

}  // namespace labelforge::prompt
