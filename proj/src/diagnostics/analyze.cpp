#include <algorithm>
#include <set>

#include "labelforge/core/error.hpp"
#include "labelforge/diagnostics/diagnostics.hpp"

namespace labelforge::diag {

std::vector<ProgramStats> analyze(const VoteMatrix& votes, const std::vector<std::optional<int>>* gold,
                                  double coverage_threshold) {
    if (!(coverage_threshold >= 0.0 && coverage_threshold <= 1.0))
        throw ValidationError("coverage threshold must be within [0, 1]");
    if (gold && gold->size() != votes.n()) throw DimensionError("gold labels do not align with vote rows");
    const std::size_t n = votes.n(), m = votes.m();

    std::vector<std::size_t> covered(m, 0), overlapped(m, 0), conflicted(m, 0), correct(m, 0), support(m, 0);
    std::vector<std::set<int>> polarity(m);
    std::vector<int> class_count;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = votes.row(i);
        std::size_t active = 0;
        int max_class = -1;
        for (int v : row)
            if (v != kAbstain) {
                ++active;
                max_class = std::max(max_class, v);
            }
        if (active == 0) continue;
        class_count.assign(static_cast<std::size_t>(max_class + 1), 0);
        for (int v : row)
            if (v != kAbstain) ++class_count[static_cast<std::size_t>(v)];
        for (std::size_t j = 0; j < m; ++j) {
            const int v = row[j];
            if (v == kAbstain) continue;
            ++covered[j];
            polarity[j].insert(v);
            if (active > 1) ++overlapped[j];
            if (active > static_cast<std::size_t>(class_count[static_cast<std::size_t>(v)])) ++conflicted[j];
            if (gold && (*gold)[i]) {
                ++support[j];
                if (*(*gold)[i] == v) ++correct[j];
            }
        }
    }

    std::vector<ProgramStats> out(m);
    const double nd = n ? static_cast<double>(n) : 1.0;
    for (std::size_t j = 0; j < m; ++j) {
        auto& s = out[j];
        s.program_id = votes.program_ids()[j];
        s.coverage = static_cast<double>(covered[j]) / nd;
        s.overlap = static_cast<double>(overlapped[j]) / nd;
        s.conflict = static_cast<double>(conflicted[j]) / nd;
        s.polarity.assign(polarity[j].begin(), polarity[j].end());
        s.gold_support = support[j];
        if (support[j] > 0) s.empirical_accuracy = static_cast<double>(correct[j]) / static_cast<double>(support[j]);
        s.flagged_low_coverage = s.coverage < coverage_threshold;
    }
    return out;
}

double label_coverage(const VoteMatrix& votes) {
    if (votes.n() == 0) return 0.0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < votes.n(); ++i) {
        const auto row = votes.row(i);
        if (std::any_of(row.begin(), row.end(), [](int v) { return v != kAbstain; })) ++c;
    }
    return static_cast<double>(c) / static_cast<double>(votes.n());
}

double coverage_of_label_model(const std::vector<PseudoLabel>& pseudolabels) {
    if (pseudolabels.empty()) return 0.0;
    const auto c = std::count_if(pseudolabels.begin(), pseudolabels.end(), [](const auto& p) { return p.covered; });
    return static_cast<double>(c) / static_cast<double>(pseudolabels.size());
}

}  // namespace labelforge::diag
