#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "labelforge/dsl/extract.hpp"
#include "labelforge/prompt/cost.hpp"
#include "labelforge/prompt/prompt.hpp"
#include "labelforge/prompt/transport.hpp"

namespace labelforge::prompt {

struct GenerationJob {
    PromptSpec prompt;
    int n_programs = 10;
    ChatSettings chat;
    int concurrency = 2;

    void validate() const;
};

struct SlotOutcome {
    int slot = 0;
    ChatResult chat;
    dsl::Extraction extraction;
    std::filesystem::path raw_path;
    std::optional<std::filesystem::path> program_path;
};

struct GenerationResult {
    std::string prompt_text;
    std::vector<SlotOutcome> slots;  // ordered by slot index
    CostEstimate cost;
    [[nodiscard]] std::size_t programs() const;
};

/// Issues n_programs independent requests. Every raw response (or error) is
/// written to <run_dir>/raw/<slot>.json before extraction; accepted programs
/// go to <run_dir>/programs/<slot>.lf. Failed slots do not abort the batch.
GenerationResult generate_programs(const GenerationJob& job, Transport& transport, const ClassSpace& classes,
                                   const ConceptSet* concepts, const std::filesystem::path& run_dir,
                                   const Pricing& pricing);

/// Slot file stem: zero-padded so directory order equals slot order.
std::string slot_name(int slot);

}  // namespace labelforge::prompt
