#pragma once

#include <filesystem>
#include <vector>

#include "labelforge/core/types.hpp"

namespace labelforge {

/// JSONL, one row per record: {id, label, class, covered, posterior}.
void save_pseudolabels(const std::vector<PseudoLabel>& labels, const ClassSpace& classes,
                       const std::filesystem::path& path);
std::vector<PseudoLabel> load_pseudolabels(const std::filesystem::path& path, int num_classes);

}  // namespace labelforge
