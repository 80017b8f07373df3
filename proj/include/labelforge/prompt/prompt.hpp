#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "labelforge/core/types.hpp"

namespace labelforge::prompt {

enum class SupplementKind { DatasetDescription, DataExemplars, Keywords, LabelingRules };

std::string_view heading(SupplementKind kind);
SupplementKind parse_supplement_kind(std::string_view s);

struct Exemplar {
    std::string text;
    std::string class_name;
};

struct SupplementBlock {
    SupplementKind kind = SupplementKind::DatasetDescription;
    std::string body;
    std::vector<Exemplar> exemplars;  // DataExemplars only
};

SupplementBlock keywords_block(const std::vector<std::string>& keywords);
SupplementBlock exemplars_block(std::vector<Exemplar> exemplars, std::string preface = {});

struct PromptSpec {
    std::string task_description;
    std::string labeling_instructions;
    std::string function_signature;
    std::vector<SupplementBlock> supplements;
};

/// Supplements in the given order, then task description, labeling
/// instructions and function signature, each under its own heading.
std::string build_prompt(const PromptSpec& spec);

/// Class-to-index mapping plus the return -1 rule.
std::string labeling_instructions(const ClassSpace& classes);

/// How the program must be written: the rule language in one fenced block.
std::string function_signature(Modality modality);

/// Shipped per-dataset prompt data (data/tasks/<name>.json).
struct TaskPack {
    std::string name;
    std::vector<std::string> classes;
    Modality modality = Modality::Text;
    std::string task_description;
    std::string zero_shot_prompt;  // contains the "[text]" placeholder (text tasks)
    std::optional<std::string> labeling_instructions;
    std::optional<std::string> dataset_description;
    std::optional<std::string> concept_prompt;         // score tasks
    std::optional<std::string> score_program_prompt;   // contains "{descriptions}"
    std::vector<std::string> notes;

    static TaskPack load(const std::filesystem::path& path);
    /// `name_or_path` is a JSON file path or a task name looked up in `dir`.
    static TaskPack find(const std::string& name_or_path, const std::filesystem::path& dir);

    [[nodiscard]] ClassSpace class_space() const { return ClassSpace(classes); }
    /// For score tasks with a score_program_prompt, the task description is
    /// that template filled with the concept descriptions.
    [[nodiscard]] PromptSpec prompt_spec(std::vector<SupplementBlock> supplements = {},
                                         const ConceptSet* concepts = nullptr) const;
    /// The per-record prompt used by direct annotation.
    [[nodiscard]] std::string zero_shot_for(const std::string& text) const;
};

/// Concept-score program prompt with the concept descriptions filled in.
std::string score_program_prompt(const std::string& template_text, const std::vector<std::string>& concepts);

}  // namespace labelforge::prompt
