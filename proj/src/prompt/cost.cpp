#include "labelforge/prompt/cost.hpp"

#include "labelforge/core/error.hpp"

namespace labelforge::prompt {

std::size_t heuristic_tokens(std::string_view text) { return (text.size() + 3) / 4; }

Pricing Pricing::from_json(const nlohmann::json& j) {
    Pricing p;
    auto rate = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_number()) throw ValidationError(std::string("pricing '") + key + "' must be a number");
        return j[key].get<double>();
    };
    const bool per_1m = j.contains("input_per_1m") || j.contains("output_per_1m");
    const bool per_1k = j.contains("input_per_1k") || j.contains("output_per_1k");
    if (per_1m && per_1k) throw ValidationError("pricing mixes per-1k and per-1m rates");
    if (per_1m) {
        p.unit_tokens = 1e6;
        p.input_rate = rate("input_per_1m");
        p.output_rate = rate("output_per_1m");
    } else {
        p.input_rate = rate("input_per_1k");
        p.output_rate = rate("output_per_1k");
    }
    return p;
}

CostEstimate estimate_cost(std::span<const std::string> texts_in, std::span<const std::string> texts_out,
                           const Pricing& pricing, const Tokenizer& tokenizer) {
    if (!pricing.input_rate) throw ValidationError("pricing table has no input rate");
    if (!pricing.output_rate) throw ValidationError("pricing table has no output rate");
    if (*pricing.input_rate < 0 || *pricing.output_rate < 0) throw ValidationError("pricing rates must be nonnegative");
    if (!(pricing.unit_tokens > 0)) throw ValidationError("pricing unit must be positive");
    const Tokenizer& tok = tokenizer ? tokenizer : Tokenizer(heuristic_tokens);
    CostEstimate c;
    for (const auto& t : texts_in) c.input_tokens += tok(t);
    for (const auto& t : texts_out) c.output_tokens += tok(t);
    c.price_per_unit_input = *pricing.input_rate;
    c.price_per_unit_output = *pricing.output_rate;
    c.unit_tokens = pricing.unit_tokens;
    c.dollars = (static_cast<double>(c.input_tokens) * c.price_per_unit_input +
                 static_cast<double>(c.output_tokens) * c.price_per_unit_output) /
                c.unit_tokens;
    return c;
}

nlohmann::ordered_json cost_to_json(const CostEstimate& c) {
    nlohmann::ordered_json j;
    j["input_tokens"] = c.input_tokens;
    j["output_tokens"] = c.output_tokens;
    j["unit_tokens"] = c.unit_tokens;
    j["price_input"] = c.price_per_unit_input;
    j["price_output"] = c.price_per_unit_output;
    j["dollars"] = c.dollars;
    return j;
}

}  // namespace labelforge::prompt
