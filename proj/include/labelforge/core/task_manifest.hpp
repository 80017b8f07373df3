#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "labelforge/core/types.hpp"

namespace labelforge {

/// Task description file (JSON):
///   {"name", "classes": [...], "modality": "text"|"scores",
///    "dataset": path, "validation": path?, "concepts": [...] | path?}
/// Relative paths resolve against the manifest's directory.
struct TaskManifest {
    std::string name;
    ClassSpace classes;
    Modality modality = Modality::Text;
    std::filesystem::path dataset;
    std::optional<std::filesystem::path> validation;
    ConceptSet concepts;

    static TaskManifest load(const std::filesystem::path& path);
};

}  // namespace labelforge
