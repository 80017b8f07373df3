#include "labelforge/prompt/generate.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/core/error.hpp"

namespace labelforge::prompt {

namespace fs = std::filesystem;

void GenerationJob::validate() const {
    if (n_programs < 1) throw ValidationError("n_programs must be at least 1");
    if (!(chat.temperature >= 0.0 && chat.temperature <= 2.0))
        throw ValidationError("temperature must be within [0, 2]");
    if (concurrency < 1) throw ValidationError("concurrency must be at least 1");
    if (chat.retry.max_attempts < 1) throw ValidationError("retry policy needs at least one attempt");
}

std::size_t GenerationResult::programs() const {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const SlotOutcome& s) { return s.extraction.ok(); }));
}

std::string slot_name(int slot) {
    std::string s = std::to_string(slot);
    if (s.size() < 3) s.insert(0, 3 - s.size(), '0');
    return s;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("write failed for " + path.string());
}

std::string raw_artifact(int slot, const ChatResult& chat) {
    nlohmann::ordered_json j;
    j["slot"] = slot;
    j["ok"] = chat.ok;
    if (!chat.ok) j["error"] = chat.error;
    j["attempts"] = nlohmann::ordered_json::array();
    for (const auto& a : chat.attempts) {
        nlohmann::ordered_json aj;
        aj["status"] = a.status;
        if (!a.error.empty()) aj["error"] = a.error;
        aj["body"] = a.body;
        j["attempts"].push_back(aj);
    }
    return j.dump(2) + "\n";
}

}  // namespace

GenerationResult generate_programs(const GenerationJob& job, Transport& transport, const ClassSpace& classes,
                                   const ConceptSet* concepts, const fs::path& run_dir, const Pricing& pricing) {
    job.validate();
    if (!pricing.input_rate || !pricing.output_rate) throw ValidationError("pricing table needs both rates");

    GenerationResult result;
    result.prompt_text = build_prompt(job.prompt);
    const fs::path raw_dir = run_dir / "raw";
    const fs::path prog_dir = run_dir / "programs";
    fs::create_directories(raw_dir);
    fs::create_directories(prog_dir);
    write_file(run_dir / "prompt.txt", result.prompt_text);

    result.slots.resize(static_cast<std::size_t>(job.n_programs));
    std::mutex io_mutex;
    std::atomic<int> next{0};
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const int slot = next.fetch_add(1);
            if (slot >= job.n_programs) return;
            SlotOutcome& out = result.slots[static_cast<std::size_t>(slot)];
            out.slot = slot;
            try {
                out.chat = chat_complete(transport, job.chat, result.prompt_text);
                const std::string name = slot_name(slot);
                out.raw_path = raw_dir / (name + ".json");
                {
                    std::lock_guard lock(io_mutex);
                    write_file(out.raw_path, raw_artifact(slot, out.chat));
                }
                if (!out.chat.ok) {
                    out.extraction.rejection = "request failed: " + out.chat.error;
                    spdlog::warn("slot {}: {}", slot, out.extraction.rejection);
                    continue;
                }
                out.extraction = dsl::extract_program(out.chat.content, classes, concepts, "gen_" + name);
                if (out.extraction.ok()) {
                    auto path = prog_dir / (name + ".lf");
                    std::string text = "# generated, slot " + std::to_string(slot) + "\n" +
                                       dsl::pretty_print(*out.extraction.program, classes);
                    std::lock_guard lock(io_mutex);
                    write_file(path, text);
                    out.program_path = path;
                } else {
                    spdlog::warn("slot {}: {}", slot, out.extraction.rejection);
                }
            } catch (...) {
                std::lock_guard lock(io_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int threads = std::min(job.concurrency, job.n_programs);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    // Billing follows what the provider would charge: one prompt and one
    // completion per successful request.
    std::vector<std::string> ins, outs;
    for (const auto& s : result.slots) {
        if (!s.chat.ok) continue;
        ins.push_back(result.prompt_text);
        outs.push_back(s.chat.content);
    }
    result.cost = estimate_cost(ins, outs, pricing);

    nlohmann::ordered_json summary;
    summary["n_programs"] = job.n_programs;
    summary["model"] = job.chat.model;
    summary["temperature"] = job.chat.temperature;
    summary["endpoint"] = job.chat.endpoint;
    summary["accepted"] = result.programs();
    summary["slots"] = nlohmann::ordered_json::array();
    for (const auto& s : result.slots) {
        nlohmann::ordered_json sj;
        sj["slot"] = s.slot;
        sj["attempts"] = s.chat.attempts.size();
        sj["raw"] = fs::relative(s.raw_path, run_dir).generic_string();
        if (s.program_path) {
            sj["program"] = fs::relative(*s.program_path, run_dir).generic_string();
        } else {
            sj["program"] = nullptr;
            sj["rejection"] = s.extraction.rejection;
            if (!s.extraction.errors.empty()) sj["errors"] = s.extraction.errors;
        }
        summary["slots"].push_back(sj);
    }
    write_file(run_dir / "generation.json", summary.dump(2) + "\n");
    write_file(run_dir / "cost.json", cost_to_json(result.cost).dump(2) + "\n");
    return result;
}

}  // namespace labelforge::prompt
