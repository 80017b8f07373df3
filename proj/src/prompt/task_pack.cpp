#include <fstream>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/prompt/prompt.hpp"

namespace labelforge::prompt {

namespace {

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw DataError(std::string("task pack field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

}  // namespace

TaskPack TaskPack::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open task pack " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    TaskPack p;
    try {
        p.name = j.at("name").get<std::string>();
        p.classes = j.at("classes").get<std::vector<std::string>>();
        p.modality = parse_modality(j.value("modality", std::string("text")));
        p.task_description = j.at("task_description").get<std::string>();
        p.zero_shot_prompt = j.value("zero_shot_prompt", std::string());
        p.labeling_instructions = opt_string(j, "labeling_instructions");
        p.dataset_description = opt_string(j, "dataset_description");
        p.concept_prompt = opt_string(j, "concept_prompt");
        p.score_program_prompt = opt_string(j, "score_program_prompt");
        if (j.contains("notes")) p.notes = j["notes"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    (void)ClassSpace(p.classes);
    return p;
}

TaskPack TaskPack::find(const std::string& name_or_path, const std::filesystem::path& dir) {
    std::filesystem::path direct(name_or_path);
    if (std::filesystem::is_regular_file(direct)) return load(direct);
    auto candidate = dir / (name_or_path + ".json");
    if (std::filesystem::is_regular_file(candidate)) return load(candidate);
    throw DataError("no task pack named '" + name_or_path + "' (looked in " + dir.string() + ")");
}

PromptSpec TaskPack::prompt_spec(std::vector<SupplementBlock> supplements, const ConceptSet* concepts) const {
    PromptSpec s;
    s.task_description = task_description;
    if (modality == Modality::Scores && score_program_prompt && concepts && !concepts->empty())
        s.task_description = prompt::score_program_prompt(*score_program_prompt, concepts->features());
    s.labeling_instructions = labeling_instructions ? *labeling_instructions
                                                    : prompt::labeling_instructions(class_space());
    s.function_signature = function_signature(modality);
    s.supplements = std::move(supplements);
    return s;
}

std::string TaskPack::zero_shot_for(const std::string& text) const {
    std::string out = zero_shot_prompt;
    const std::string key = "[text]";
    auto pos = out.find(key);
    if (pos == std::string::npos) throw ValidationError("task pack '" + name + "' has no [text] zero-shot prompt");
    out.replace(pos, key.size(), text);
    return out;
}

}  // namespace labelforge::prompt
