#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "labelforge/concepts/concepts.hpp"
#include "labelforge/core/error.hpp"

namespace labelforge::concepts {

std::size_t deduplicate(std::vector<std::string>& items) {
    std::unordered_set<std::string> seen;
    std::vector<std::string> kept;
    for (auto& s : items)
        if (seen.insert(s).second) kept.push_back(std::move(s));
    std::size_t dropped = items.size() - kept.size();
    items = std::move(kept);
    return dropped;
}

void validate(const ConceptSet& set) {
    std::unordered_set<std::string> seen;
    for (const auto& c : set.concepts) {
        if (c.empty()) throw ValidationError("empty concept description");
        if (!seen.insert(c).second) throw ValidationError("duplicate concept '" + c + "'");
    }
    for (const auto& s : set.spurious)
        if (!seen.count(s)) throw ValidationError("spurious entry '" + s + "' is not a concept");
}

ConceptSet load_concept_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open concept set " + path.string());
    ConceptSet cs;
    try {
        auto j = nlohmann::json::parse(in);
        cs.task = j.value("task", std::string());
        cs.concepts = j.at("concepts").get<std::vector<std::string>>();
        if (j.contains("spurious")) cs.spurious = j["spurious"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    validate(cs);
    return cs;
}

void save_concept_set(const ConceptSet& set, const std::filesystem::path& path) {
    validate(set);
    nlohmann::ordered_json j;
    j["task"] = set.task;
    j["concepts"] = set.concepts;
    j["spurious"] = set.spurious;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace labelforge::concepts
