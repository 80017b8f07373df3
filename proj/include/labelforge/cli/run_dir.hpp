#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace labelforge::cli {

/// One directory per run, shared by the pipeline steps. manifest.json keeps
/// the run id, the task manifest, the programs directory, the label model,
/// a config snapshot and one entry per executed step.
class RunDir {
public:
    RunDir(std::filesystem::path runs_root, std::string run_id, bool force);

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] const std::string& id() const { return id_; }
    [[nodiscard]] std::filesystem::path file(const std::string& name) const { return path_ / name; }

    /// Creates the directory. Throws if any listed output (file or
    /// directory, relative to the run) already exists and force is off.
    void claim(const std::vector<std::string>& outputs) const;

    /// Merges `fields` into the manifest and records the step with its
    /// arguments, outputs and timestamps.
    void record_step(const std::string& command, const nlohmann::ordered_json& args,
                     const std::vector<std::string>& outputs, const nlohmann::ordered_json& fields = {}) const;

    /// Files referenced by an earlier step; throws if a path is missing.
    [[nodiscard]] std::filesystem::path existing(const std::string& name, const std::string& produced_by) const;

private:
    std::filesystem::path path_;
    std::string id_;
    bool force_;
};

/// UTC ISO-8601. Honors SOURCE_DATE_EPOCH so reruns are byte-identical.
std::string timestamp_now();

}  // namespace labelforge::cli
