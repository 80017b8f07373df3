#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "labelforge/core/types.hpp"

namespace labelforge::distill {

enum class FeatureMode { HashedBagOfWords, RawScores };

/// Tokens are maximal runs of ASCII letters, digits, apostrophes and
/// non-ASCII bytes ("word"), or maximal non-space runs ("whitespace").
struct FeatureSpec {
    FeatureMode mode = FeatureMode::HashedBagOfWords;
    std::size_t dims = 4096;
    bool lowercase = true;
    std::string token_pattern = "word";
    std::uint64_t seed = 0x5eed'1abe'1f0e'0001ULL;

    static FeatureSpec for_modality(Modality m, std::size_t n_concepts = 0);
    void validate(int num_classes = 2) const;
    [[nodiscard]] nlohmann::ordered_json to_json() const;
    static FeatureSpec from_json(const nlohmann::json& j);
    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Sparse vector, indices strictly increasing.
struct SparseRow {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
};

std::vector<std::string> tokenize(const std::string& text, const FeatureSpec& spec);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed);

/// Hashed counts, L2-normalized; or the raw score vector.
SparseRow featurize(const Record& record, const FeatureSpec& spec);
SparseRow dense_row(const std::vector<double>& values);

}  // namespace labelforge::distill
