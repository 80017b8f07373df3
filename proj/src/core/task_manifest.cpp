#include <fstream>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/core/task_manifest.hpp"

namespace labelforge {

namespace {

ConceptSet read_concepts(const nlohmann::json& j, const std::filesystem::path& base, const std::string& task) {
    ConceptSet cs;
    cs.task = task;
    if (j.is_array()) {
        cs.concepts = j.get<std::vector<std::string>>();
        return cs;
    }
    if (!j.is_string()) throw DataError("manifest field 'concepts' must be a list or a path");
    const auto path = base / j.get<std::string>();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open concept set " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    cs.task = doc.value("task", task);
    cs.concepts = doc.at("concepts").get<std::vector<std::string>>();
    cs.spurious = doc.value("spurious", std::vector<std::string>{});
    return cs;
}

}  // namespace

TaskManifest TaskManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open task manifest " + path.string());
    TaskManifest m;
    try {
        const auto j = nlohmann::json::parse(in);
        const auto base = path.parent_path();
        m.name = j.at("name").get<std::string>();
        m.classes = ClassSpace(j.at("classes").get<std::vector<std::string>>());
        m.modality = parse_modality(j.value("modality", std::string("text")));
        m.dataset = base / j.at("dataset").get<std::string>();
        if (j.contains("validation") && !j["validation"].is_null())
            m.validation = base / j["validation"].get<std::string>();
        if (j.contains("concepts")) m.concepts = read_concepts(j["concepts"], base, m.name);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (m.modality == Modality::Scores && m.concepts.empty())
        throw ValidationError(path.string() + ": scores modality requires a 'concepts' list");
    return m;
}

}  // namespace labelforge
