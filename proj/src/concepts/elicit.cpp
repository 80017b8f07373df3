#include <fstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/concepts/concepts.hpp"
#include "labelforge/core/error.hpp"
#include "labelforge/dsl/extract.hpp"

namespace labelforge::concepts {

namespace fs = std::filesystem;

namespace {

bool wrapper_key(const std::string& k) {
    return k == "concepts" || k == "primitive_concepts" || k == "primitive concepts";
}

// {"foot type": ["toed", "webbed"]} -> "foot type is toed", "foot type is webbed".
// Nested keys join with a space; wrapper keys at the top carry no meaning.
void collect(const nlohmann::ordered_json& node, const std::string& prefix, std::vector<std::string>& out) {
    auto add = [&](const std::string& value) {
        if (!value.empty()) out.push_back(prefix.empty() ? value : prefix + " is " + value);
    };
    if (node.is_string()) {
        add(node.get<std::string>());
    } else if (node.is_array()) {
        for (const auto& e : node) collect(e, prefix, out);
    } else if (node.is_object()) {
        for (const auto& [k, v] : node.items()) {
            if (prefix.empty() && wrapper_key(k))
                collect(v, "", out);
            else
                collect(v, prefix.empty() ? k : prefix + " " + k, out);
        }
    } else if (node.is_number() || node.is_boolean()) {
        add(node.dump());
    }
}

std::optional<nlohmann::ordered_json> find_json(const std::string& content) {
    auto try_parse = [](const std::string& s) -> std::optional<nlohmann::ordered_json> {
        auto j = nlohmann::ordered_json::parse(s, nullptr, false);
        if (j.is_discarded() || !(j.is_object() || j.is_array())) return std::nullopt;
        return j;
    };
    if (auto j = try_parse(content)) return j;
    for (const auto& block : dsl::fenced_blocks(content))
        if (auto j = try_parse(block)) return j;
    auto open = content.find('{');
    auto close = content.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open)
        if (auto j = try_parse(content.substr(open, close - open + 1))) return j;
    return std::nullopt;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

}  // namespace

ElicitResult parse_concepts(const std::string& content, const std::string& task) {
    ElicitResult r;
    auto j = find_json(content);
    if (!j) {
        r.rejection = "response holds no JSON concept listing";
        return r;
    }
    std::vector<std::string> items;
    collect(*j, "", items);
    r.duplicates_dropped = deduplicate(items);
    if (r.duplicates_dropped) spdlog::warn("dropped {} duplicate concept(s)", r.duplicates_dropped);
    if (items.empty()) {
        r.rejection = "JSON concept listing is empty";
        return r;
    }
    ConceptSet cs;
    cs.task = task;
    cs.concepts = std::move(items);
    r.concepts = std::move(cs);
    return r;
}

ElicitResult elicit_concepts(prompt::Transport& transport, const prompt::ChatSettings& settings,
                             const std::string& concept_prompt, const std::string& task, const fs::path& run_dir) {
    fs::create_directories(run_dir / "raw");
    auto chat = prompt::chat_complete(transport, settings, concept_prompt);

    nlohmann::ordered_json raw;
    raw["ok"] = chat.ok;
    if (!chat.ok) raw["error"] = chat.error;
    raw["attempts"] = nlohmann::ordered_json::array();
    for (const auto& a : chat.attempts) {
        nlohmann::ordered_json aj;
        aj["status"] = a.status;
        if (!a.error.empty()) aj["error"] = a.error;
        aj["body"] = a.body;
        raw["attempts"].push_back(aj);
    }
    write_file(run_dir / "raw" / "concepts.json", raw.dump(2) + "\n");

    ElicitResult r;
    if (chat.ok) {
        r = parse_concepts(chat.content, task);
    } else {
        r.rejection = "request failed: " + chat.error;
    }
    r.chat = std::move(chat);
    if (r.concepts) save_concept_set(*r.concepts, run_dir / "concepts.json");
    return r;
}

}  // namespace labelforge::concepts
