#include "labelforge/prompt/prompt.hpp"

#include <sstream>

#include "labelforge/core/error.hpp"

namespace labelforge::prompt {

namespace {

void trim_trailing_newlines(std::string& s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

// Sections are separated by one blank line; the heading sits on its own line.
void section(std::ostringstream& out, std::string_view title, std::string body) {
    trim_trailing_newlines(body);
    if (out.tellp() > 0) out << "\n\n";
    out << '[' << title << "]\n" << body;
}

std::string render_supplement(const SupplementBlock& b, std::size_t index) {
    switch (b.kind) {
        case SupplementKind::DataExemplars: {
            if (b.exemplars.empty())
                throw ValidationError("supplement " + std::to_string(index) + " (Data Exemplars) has no exemplars");
            std::ostringstream o;
            if (!blank(b.body)) {
                std::string pre = b.body;
                trim_trailing_newlines(pre);
                o << pre << "\n";
            }
            for (std::size_t i = 0; i < b.exemplars.size(); ++i) {
                const auto& e = b.exemplars[i];
                if (e.class_name.empty())
                    throw ValidationError("supplement " + std::to_string(index) + ": exemplar " +
                                          std::to_string(i + 1) + " has no class");
                if (i) o << "\n";
                o << "Example " << (i + 1) << ": " << e.text << "\nLabel: " << e.class_name;
            }
            return o.str();
        }
        default:
            if (blank(b.body))
                throw ValidationError("supplement " + std::to_string(index) + " (" + std::string(heading(b.kind)) +
                                      ") is empty");
            if (!b.exemplars.empty())
                throw ValidationError("supplement " + std::to_string(index) + " (" + std::string(heading(b.kind)) +
                                      ") carries exemplars; only Data Exemplars may");
            return b.body;
    }
}

}  // namespace

std::string_view heading(SupplementKind kind) {
    switch (kind) {
        case SupplementKind::DatasetDescription: return "Dataset and Prediction Class Description";
        case SupplementKind::DataExemplars: return "Data Exemplars";
        case SupplementKind::Keywords: return "Keywords";
        case SupplementKind::LabelingRules: return "Specialized Labeling Rules";
    }
    return "Supplement";
}

SupplementKind parse_supplement_kind(std::string_view s) {
    if (s == "description" || s == "dataset-description" || s == "DatasetDescription")
        return SupplementKind::DatasetDescription;
    if (s == "exemplars" || s == "data-exemplars" || s == "DataExemplars") return SupplementKind::DataExemplars;
    if (s == "keywords" || s == "Keywords") return SupplementKind::Keywords;
    if (s == "rules" || s == "labeling-rules" || s == "LabelingRules") return SupplementKind::LabelingRules;
    throw ValidationError("unknown supplement kind '" + std::string(s) +
                          "' (expected description, exemplars, keywords or rules)");
}

SupplementBlock keywords_block(const std::vector<std::string>& keywords) {
    SupplementBlock b;
    b.kind = SupplementKind::Keywords;
    std::string body;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (i) body += ", ";
        body += keywords[i];
    }
    b.body = std::move(body);
    return b;
}

SupplementBlock exemplars_block(std::vector<Exemplar> exemplars, std::string preface) {
    SupplementBlock b;
    b.kind = SupplementKind::DataExemplars;
    b.body = std::move(preface);
    b.exemplars = std::move(exemplars);
    return b;
}

std::string build_prompt(const PromptSpec& spec) {
    if (blank(spec.task_description)) throw ValidationError("prompt is missing its task description");
    if (blank(spec.labeling_instructions)) throw ValidationError("prompt is missing its labeling instructions");
    if (blank(spec.function_signature)) throw ValidationError("prompt is missing its function signature");

    std::ostringstream out;
    for (std::size_t i = 0; i < spec.supplements.size(); ++i)
        section(out, heading(spec.supplements[i].kind), render_supplement(spec.supplements[i], i + 1));
    section(out, "Task Description", spec.task_description);
    section(out, "Labeling Instructions", spec.labeling_instructions);
    section(out, "Function Signature", spec.function_signature);
    out << "\n";
    return out.str();
}

std::string labeling_instructions(const ClassSpace& classes) {
    std::ostringstream o;
    o << "The prediction classes map to these class indices: ";
    for (int k = 0; k < classes.size(); ++k) {
        if (k) o << ", ";
        o << '"' << classes.name(k) << "\" -> " << k;
    }
    o << ". The program returns the class index of its label. "
         "If the label cannot be determined, return -1 (ABSTAIN).";
    return o.str();
}

std::string function_signature(Modality modality) {
    std::string common =
        "Write the function as a labeling program in the rule language below and put it in one ``` code block.\n"
        "  rule: <condition> -> <class>;\n"
        "  default -> <class or ABSTAIN>;\n"
        "Rules are checked top to bottom and the first true condition gives the label. "
        "A class may be written by name or by index; ABSTAIN is -1.\n";
    if (modality == Modality::Text) {
        return "def label_function(text: str) -> int\n" + common +
               "Conditions on the input text: contains(\"word\"), contains_any([\"a\", \"b\"]), matches(\"regex\"), "
               "length_at_least(N), uppercase_ratio_at_least(R). "
               "Combine them with and, or, not and parentheses. "
               "contains and contains_any ignore case unless given case_sensitive=true.";
    }
    return "def label_function(scores: list[float]) -> int\n" + common +
           "Conditions compare one similarity score to a number: score(\"<description>\") >= 0.5, "
           "using <, <=, > or >=. Use the descriptions exactly as given. "
           "Combine them with and, or, not and parentheses.";
}

std::string score_program_prompt(const std::string& template_text, const std::vector<std::string>& concepts) {
    std::string list;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (i) list += "; ";
        list += "[\"" + concepts[i] + "\"]";
    }
    std::string out = template_text;
    const std::string key = "{descriptions}";
    auto pos = out.find(key);
    if (pos == std::string::npos) throw ValidationError("score program prompt template lacks {descriptions}");
    out.replace(pos, key.size(), list);
    return out;
}

}  // namespace labelforge::prompt
