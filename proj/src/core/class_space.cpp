#include <algorithm>
#include <cctype>
#include <set>

#include "labelforge/core/error.hpp"
#include "labelforge/core/types.hpp"

namespace labelforge {

std::string_view to_string(Modality m) {
    return m == Modality::Text ? "text" : "scores";
}

Modality parse_modality(std::string_view s) {
    if (s == "text") return Modality::Text;
    if (s == "scores") return Modality::Scores;
    throw ValidationError("unknown modality '" + std::string(s) + "' (expected text or scores)");
}

ClassSpace::ClassSpace(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() < 2) throw ValidationError("a class space needs at least 2 classes");
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw ValidationError("class names must be non-empty");
        if (!seen.insert(n).second) throw ValidationError("duplicate class name '" + n + "'");
    }
}

std::optional<int> ClassSpace::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<int>(it - names_.begin());
}

namespace {

char fold(char c) {
    if (c == ' ' || c == '-') return '_';
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool lenient_equal(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (fold(a[i]) != fold(b[i])) return false;
    return true;
}

}  // namespace

std::optional<int> ClassSpace::resolve(std::string_view token) const {
    if (auto exact = index_of(token)) return exact;
    for (int i = 0; i < size(); ++i)
        if (lenient_equal(token, names_[static_cast<std::size_t>(i)])) return i;
    return std::nullopt;
}

std::optional<std::size_t> ConceptSet::index_of(std::string_view concept_name) const {
    auto it = std::find(concepts.begin(), concepts.end(), concept_name);
    if (it == concepts.end()) return std::nullopt;
    return static_cast<std::size_t>(it - concepts.begin());
}

std::vector<std::string> ConceptSet::features() const {
    std::vector<std::string> out;
    for (const auto& c : concepts)
        if (std::find(spurious.begin(), spurious.end(), c) == spurious.end()) out.push_back(c);
    return out;
}

}  // namespace labelforge
