#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labelforge/core/types.hpp"
#include "labelforge/prompt/transport.hpp"

namespace labelforge::concepts {

/// Throws ValidationError on duplicate descriptions or spurious entries that
/// are not concepts.
void validate(const ConceptSet& set);
ConceptSet load_concept_set(const std::filesystem::path& path);
void save_concept_set(const ConceptSet& set, const std::filesystem::path& path);

/// Drops repeated descriptions, keeping the first; returns how many went.
std::size_t deduplicate(std::vector<std::string>& items);

// ---- embeddings -----------------------------------------------------------

/// Record and concept embeddings from an external encoder.
///
/// On disk: `<stem>.json` sidecar {n, C, d, concepts, record_ids, binary,
/// gold?, group?, spurious?} plus a flat little-endian float64 file holding
/// the n x d record rows followed by the C x d concept rows, row-major.
struct EmbeddingTable {
    std::size_t n = 0, C = 0, d = 0;
    std::vector<double> records;   // n * d
    std::vector<double> concepts;  // C * d
    std::vector<std::string> concept_names;
    std::vector<std::string> record_ids;
    std::vector<std::optional<int>> gold;             // empty or n entries
    std::vector<std::optional<std::string>> groups;   // empty or n entries
    std::vector<std::string> spurious;                // subset of concept_names

    [[nodiscard]] std::span<const double> record(std::size_t i) const { return {records.data() + i * d, d}; }
    [[nodiscard]] std::span<double> record(std::size_t i) { return {records.data() + i * d, d}; }
    [[nodiscard]] std::span<const double> concept_row(std::size_t c) const { return {concepts.data() + c * d, d}; }
    [[nodiscard]] std::optional<std::size_t> concept_index(std::string_view name) const;

    /// Shapes agree, entries finite, concept rows nonzero, names unique.
    void validate() const;
};

EmbeddingTable load_embeddings(const std::filesystem::path& sidecar);
/// Writes `<stem>.json` and `<stem>.bin`.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& stem);

/// n x C row-major: (cos(record i, concept c) + 1) / 2. A zero record row
/// scores 0.5 everywhere (with a warning).
std::vector<double> scores_from_embeddings(const EmbeddingTable& table);

/// Same, restricted to the listed concept columns in the given order.
std::vector<double> scores_from_embeddings(const EmbeddingTable& table, std::span<const std::size_t> columns);

/// Modified Gram-Schmidt over the rows. Directions (near-)dependent on
/// earlier ones are dropped with a warning; a zero row is an error.
std::vector<std::vector<double>> orthonormalize(const std::vector<std::vector<double>>& directions);

/// Removes each direction's component from v, one after another.
void subtract_directions(std::span<double> v, const std::vector<std::vector<double>>& unit_directions);

/// Calibrated copy: every record row has its components along the spurious
/// concept rows (orthonormalized first) subtracted.
EmbeddingTable reject_spurious(const EmbeddingTable& table, std::span<const std::size_t> spurious_rows);
/// Uses table.spurious.
EmbeddingTable reject_spurious(const EmbeddingTable& table);

/// Score-modality records over the non-spurious concepts, carrying gold and
/// group from the table. Returns the matching ConceptSet through `out_set`.
std::vector<Record> score_records(const EmbeddingTable& table, ConceptSet* out_set = nullptr,
                                  const std::string& task = {});

// ---- elicitation ------------------------------------------------------------

struct ElicitResult {
    std::optional<ConceptSet> concepts;
    std::string rejection;
    std::size_t duplicates_dropped = 0;
    prompt::ChatResult chat;
};

/// Parses a JSON concept listing: an object mapping an attribute to a value
/// or list of values ("<attribute> is <value>"), nested objects, or a plain
/// list of strings. Raw JSON or a fenced block both work.
ElicitResult parse_concepts(const std::string& content, const std::string& task);

/// Sends the concept prompt, persists <run_dir>/raw/concepts.json before
/// parsing and, when accepted, <run_dir>/concepts.json.
ElicitResult elicit_concepts(prompt::Transport& transport, const prompt::ChatSettings& settings,
                             const std::string& concept_prompt, const std::string& task,
                             const std::filesystem::path& run_dir);

}  // namespace labelforge::concepts
