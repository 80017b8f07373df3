#include "labelforge/distill/features.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include "labelforge/core/error.hpp"

namespace labelforge::distill {

FeatureSpec FeatureSpec::for_modality(Modality m, std::size_t n_concepts) {
    FeatureSpec s;
    if (m == Modality::Scores) {
        s.mode = FeatureMode::RawScores;
        s.dims = n_concepts;
    }
    return s;
}

void FeatureSpec::validate(int num_classes) const {
    if (dims == 0) throw ValidationError("feature dimension must be positive");
    if (mode == FeatureMode::HashedBagOfWords && dims < static_cast<std::size_t>(num_classes))
        throw ValidationError("feature dimension must be at least the number of classes");
    if (token_pattern != "word" && token_pattern != "whitespace")
        throw ValidationError("token pattern must be 'word' or 'whitespace'");
}

nlohmann::ordered_json FeatureSpec::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = mode == FeatureMode::HashedBagOfWords ? "hashed-bow" : "raw-scores";
    j["dims"] = dims;
    j["lowercase"] = lowercase;
    j["token_pattern"] = token_pattern;
    j["seed"] = seed;
    return j;
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
    FeatureSpec s;
    try {
        auto mode = j.at("mode").get<std::string>();
        if (mode == "hashed-bow")
            s.mode = FeatureMode::HashedBagOfWords;
        else if (mode == "raw-scores")
            s.mode = FeatureMode::RawScores;
        else
            throw DataError("unknown feature mode '" + mode + "'");
        s.dims = j.at("dims").get<std::size_t>();
        s.lowercase = j.value("lowercase", true);
        s.token_pattern = j.value("token_pattern", std::string("word"));
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("feature spec: ") + e.what());
    }
    return s;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> tokenize(const std::string& text, const FeatureSpec& spec) {
    std::vector<std::string> out;
    std::string cur;
    const bool ws = spec.token_pattern == "whitespace";
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (unsigned char c : text) {
        bool keep = ws ? !(c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
                       : (std::isalnum(c) || c == '\'' || c >= 0x80);
        if (!keep) {
            flush();
            continue;
        }
        cur.push_back(spec.lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    flush();
    return out;
}

SparseRow dense_row(const std::vector<double>& values) {
    SparseRow r;
    r.index.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) r.index[i] = static_cast<std::uint32_t>(i);
    r.value = values;
    return r;
}

SparseRow featurize(const Record& record, const FeatureSpec& spec) {
    if (spec.mode == FeatureMode::RawScores) {
        if (record.modality() != Modality::Scores)
            throw ValidationError("record '" + record.id + "' has text but the feature spec expects scores");
        const auto& v = record.scores().values;
        if (v.size() != spec.dims)
            throw DimensionError("record '" + record.id + "' has " + std::to_string(v.size()) + " scores, expected " +
                                 std::to_string(spec.dims));
        return dense_row(v);
    }
    if (record.modality() != Modality::Text)
        throw ValidationError("record '" + record.id + "' has scores but the feature spec expects text");
    std::map<std::uint32_t, double> counts;
    for (const auto& tok : tokenize(record.text(), spec))
        counts[static_cast<std::uint32_t>(fnv1a(tok, spec.seed) % spec.dims)] += 1.0;
    double norm = 0.0;
    for (const auto& [k, v] : counts) norm += v * v;
    norm = std::sqrt(norm);
    SparseRow r;
    for (const auto& [k, v] : counts) {
        r.index.push_back(k);
        r.value.push_back(v / norm);
    }
    return r;
}

}  // namespace labelforge::distill
