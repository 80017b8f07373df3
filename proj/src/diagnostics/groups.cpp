#include "labelforge/core/error.hpp"
#include "labelforge/diagnostics/diagnostics.hpp"

namespace labelforge::diag {

GroupReport group_metrics(const std::vector<int>& predictions, const std::vector<int>& gold,
                          const std::vector<std::string>& groups) {
    if (predictions.size() != gold.size() || gold.size() != groups.size())
        throw DimensionError("predictions, gold labels and groups must have the same length");
    if (groups.empty()) throw ValidationError("group metrics need at least one record with a group");

    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // group -> (correct, total)
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto& t = tally[groups[i]];
        ++t.second;
        if (predictions[i] == gold[i]) {
            ++t.first;
            ++correct;
        }
    }

    GroupReport r;
    r.average_accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    bool first = true;
    for (const auto& [g, t] : tally) {
        const double acc = static_cast<double>(t.first) / static_cast<double>(t.second);
        r.per_group[g] = acc;
        r.group_sizes[g] = t.second;
        if (first || acc < r.worst_group_accuracy) {
            r.worst_group_accuracy = acc;
            r.worst_group = g;
            first = false;
        }
    }
    r.gap = r.average_accuracy - r.worst_group_accuracy;
    return r;
}

}  // namespace labelforge::diag
