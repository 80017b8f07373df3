#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelforge/dsl/parser.hpp"

namespace labelforge::dsl {

struct Extraction {
    std::optional<LabelingProgram> program;
    /// Empty on success; "no program found" or "no block parsed" otherwise.
    std::string rejection;
    /// One entry per fenced block that failed to parse: "block <k>: <error>".
    std::vector<std::string> errors;
    /// Source text of the accepted block.
    std::string source;

    [[nodiscard]] bool ok() const { return program.has_value(); }
};

/// Fenced ``` blocks in order of appearance; the info string after the
/// opening fence is dropped.
std::vector<std::string> fenced_blocks(std::string_view text);

/// First fenced block of a model response that parses as a program.
Extraction extract_program(std::string_view llm_response, const ClassSpace& classes,
                           const ConceptSet* concepts = nullptr, std::string id = {});

}  // namespace labelforge::dsl
