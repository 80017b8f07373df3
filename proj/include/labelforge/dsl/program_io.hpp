#pragma once

#include <filesystem>
#include <vector>

#include "labelforge/dsl/parser.hpp"

namespace labelforge::dsl {

/// Parses every `*.lf` file in a directory, sorted by file name. The program
/// id is the file stem. Errors are rethrown prefixed with the file path.
std::vector<LabelingProgram> load_programs(const std::filesystem::path& dir, const ClassSpace& classes,
                                           const ConceptSet* concepts = nullptr);

LabelingProgram load_program(const std::filesystem::path& file, const ClassSpace& classes,
                             const ConceptSet* concepts = nullptr);

}  // namespace labelforge::dsl
