#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace labelforge {

/// Reserved "no label" vote. Never a class index.
inline constexpr int kAbstain = -1;

enum class Modality { Text, Scores };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);

/// Ordered, unique class names; the position of a name is its index.
class ClassSpace {
public:
    ClassSpace() = default;
    explicit ClassSpace(std::vector<std::string> names);

    [[nodiscard]] int size() const { return static_cast<int>(names_.size()); }
    [[nodiscard]] const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] bool contains(int index) const { return index >= 0 && index < size(); }

    /// Exact name lookup.
    [[nodiscard]] std::optional<int> index_of(std::string_view name) const;

    /// Lenient lookup used for rule targets: ASCII case-insensitive, and
    /// '_' in the token matches ' ' or '-' in the class name.
    [[nodiscard]] std::optional<int> resolve(std::string_view token) const;

    friend bool operator==(const ClassSpace&, const ClassSpace&) = default;

private:
    std::vector<std::string> names_;
};

/// Ordered concept descriptions for the score modality. Record score
/// vectors are aligned to this order.
struct ConceptSet {
    std::string task;
    std::vector<std::string> concepts;
    std::vector<std::string> spurious;

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view concept_name) const;
    [[nodiscard]] bool empty() const { return concepts.empty(); }
    /// Concepts that are not flagged spurious, in order.
    [[nodiscard]] std::vector<std::string> features() const;

    friend bool operator==(const ConceptSet&, const ConceptSet&) = default;
};

struct ScoreVector {
    std::vector<double> values;  // aligned to ConceptSet::concepts
    friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

struct Record {
    std::string id;
    std::variant<std::string, ScoreVector> payload;
    std::optional<int> gold;
    std::optional<std::string> group;

    [[nodiscard]] Modality modality() const {
        return std::holds_alternative<std::string>(payload) ? Modality::Text : Modality::Scores;
    }
    [[nodiscard]] const std::string& text() const { return std::get<std::string>(payload); }
    [[nodiscard]] const ScoreVector& scores() const { return std::get<ScoreVector>(payload); }

    friend bool operator==(const Record&, const Record&) = default;
};

struct PseudoLabel {
    std::string record_id;
    std::vector<double> posterior;
    int hard = 0;
    bool covered = false;

    friend bool operator==(const PseudoLabel&, const PseudoLabel&) = default;
};

/// Index of the first maximum. Ties go to the smallest class index.
int argmax_first(const std::vector<double>& v);

/// Builds a pseudolabel from unnormalized nonnegative scores. A zero total or
/// covered=false yields the uniform posterior.
PseudoLabel make_pseudolabel(std::string record_id, std::vector<double> scores, bool covered);

}  // namespace labelforge
