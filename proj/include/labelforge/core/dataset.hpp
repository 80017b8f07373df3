#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "labelforge/core/task_manifest.hpp"
#include "labelforge/core/types.hpp"

namespace labelforge {

/// Reads a dataset in file order. Text modality: JSONL. Scores modality: CSV
/// (by ".csv" extension) or JSONL with a "scores" object.
std::vector<Record> load_dataset(const std::filesystem::path& path, const TaskManifest& manifest);
std::vector<Record> read_jsonl_records(std::istream& in, const TaskManifest& manifest, const std::string& source);
std::vector<Record> read_csv_records(std::istream& in, const TaskManifest& manifest, const std::string& source);

/// Inverse of load_dataset for the same manifest and extension.
void save_dataset(const std::vector<Record>& records, const std::filesystem::path& path,
                  const TaskManifest& manifest);

/// Gold labels aligned to records; nullopt where absent.
std::vector<std::optional<int>> gold_labels(const std::vector<Record>& records);

}  // namespace labelforge
