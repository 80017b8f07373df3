#include "labelforge/cli/run_dir.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "labelforge/core/error.hpp"

namespace labelforge::cli {

namespace fs = std::filesystem;

namespace {

bool valid_id(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    return true;
}

}  // namespace

std::string timestamp_now() {
    std::time_t t;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    } else {
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunDir::RunDir(fs::path runs_root, std::string run_id, bool force)
    : path_(std::move(runs_root) / run_id), id_(std::move(run_id)), force_(force) {
    if (!valid_id(id_)) throw ValidationError("run id '" + id_ + "' may only use letters, digits, '-', '_' and '.'");
}

void RunDir::claim(const std::vector<std::string>& outputs) const {
    if (!force_) {
        for (const auto& o : outputs) {
            if (fs::exists(path_ / o))
                throw ValidationError((path_ / o).string() + " already exists; pass --force to overwrite it");
        }
    }
    fs::create_directories(path_);
}

fs::path RunDir::existing(const std::string& name, const std::string& produced_by) const {
    auto p = path_ / name;
    if (!fs::exists(p))
        throw DataError(p.string() + " not found; run '" + produced_by + "' for run '" + id_ +
                        "' first or pass the path explicitly");
    return p;
}

void RunDir::record_step(const std::string& command, const nlohmann::ordered_json& args,
                         const std::vector<std::string>& outputs, const nlohmann::ordered_json& fields) const {
    const fs::path mpath = path_ / "manifest.json";
    nlohmann::ordered_json m;
    if (fs::exists(mpath)) {
        std::ifstream in(mpath);
        m = nlohmann::ordered_json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.is_object()) throw DataError(mpath.string() + " is not valid JSON");
    }
    const std::string now = timestamp_now();
    m["run_id"] = id_;
    if (!m.contains("created_at")) m["created_at"] = now;
    if (fields.is_object())
        for (const auto& [k, v] : fields.items()) m[k] = v;
    nlohmann::ordered_json step;
    step["finished_at"] = now;
    step["args"] = args;
    step["outputs"] = outputs;
    for (const auto& o : outputs)
        if (!fs::exists(path_ / o)) throw Error("step '" + command + "' did not produce " + o);
    m["steps"][command] = step;
    std::ofstream out(mpath, std::ios::trunc);
    if (!out) throw DataError("cannot write " + mpath.string());
    out << m.dump(2) << "\n";
}

}  // namespace labelforge::cli
