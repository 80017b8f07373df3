#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "labelforge/labelmodel/label_models.hpp"

namespace labelforge::lm {

namespace {

std::vector<double> checked_weights(const VoteMatrix& votes, std::optional<std::span<const double>> weights) {
    if (!weights) return std::vector<double>(votes.m(), 1.0);
    if (weights->size() != votes.m())
        throw DimensionError("got " + std::to_string(weights->size()) + " weights for " + std::to_string(votes.m()) +
                             " programs");
    for (std::size_t j = 0; j < weights->size(); ++j)
        if (!((*weights)[j] > 0.0) || !std::isfinite((*weights)[j]))
            throw ValidationError("weight for program '" + votes.program_ids()[j] + "' must be positive");
    return {weights->begin(), weights->end()};
}

}  // namespace

std::vector<PseudoLabel> majority_vote(const VoteMatrix& votes, int num_classes,
                                       std::optional<std::span<const double>> weights) {
    if (votes.m() == 0) throw ValidationError("majority vote needs at least one program");
    detail::check_classes(votes, num_classes);
    const auto w = checked_weights(votes, weights);
    std::vector<PseudoLabel> out;
    out.reserve(votes.n());
    for (std::size_t i = 0; i < votes.n(); ++i) {
        std::vector<double> score(static_cast<std::size_t>(num_classes), 0.0);
        bool covered = false;
        for (std::size_t j = 0; j < votes.m(); ++j) {
            int v = votes.at(i, j);
            if (v == kAbstain) continue;
            score[static_cast<std::size_t>(v)] += w[j];
            covered = true;
        }
        out.push_back(make_pseudolabel(detail::record_id(votes, i), std::move(score), covered));
    }
    return out;
}

LabelModelParams majority_params(const VoteMatrix& votes, int num_classes,
                                 std::optional<std::span<const double>> weights) {
    detail::check_classes(votes, num_classes);
    LabelModelParams p;
    p.kind = weights ? ModelKind::WMV : ModelKind::MV;
    p.num_classes = num_classes;
    p.program_ids = votes.program_ids();
    p.priors.assign(static_cast<std::size_t>(num_classes), 1.0 / num_classes);
    p.propensity = detail::coverage(votes);
    p.weights = checked_weights(votes, weights);
    return p;
}

std::vector<int> plurality_labels(const VoteMatrix& votes, int num_classes) {
    std::vector<int> out(votes.n(), kAbstain);
    for (std::size_t i = 0; i < votes.n(); ++i) {
        std::vector<int> count(static_cast<std::size_t>(num_classes), 0);
        bool covered = false;
        for (int v : votes.row(i))
            if (v != kAbstain) {
                ++count[static_cast<std::size_t>(v)];
                covered = true;
            }
        if (covered) out[i] = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
    }
    return out;
}

LabelModelParams fit_weighted_majority(const VoteMatrix& votes, int num_classes,
                                       const std::vector<std::optional<int>>* gold) {
    detail::check_classes(votes, num_classes);
    if (gold && gold->size() != votes.n()) throw DimensionError("gold labels do not align with vote rows");
    const auto reference = plurality_labels(votes, num_classes);
    std::vector<double> acc(votes.m(), 0.5);
    for (std::size_t j = 0; j < votes.m(); ++j) {
        double hit = 0.0, total = 0.0;
        for (std::size_t i = 0; i < votes.n(); ++i) {
            int v = votes.at(i, j);
            if (v == kAbstain) continue;
            int ref = kAbstain;
            if (gold && (*gold)[i]) ref = *(*gold)[i];
            else if (!gold) ref = reference[i];
            if (ref == kAbstain) continue;
            total += 1.0;
            if (v == ref) hit += 1.0;
        }
        if (total > 0) acc[j] = std::clamp(hit / total, kAccuracyLow, kAccuracyHigh);
    }
    LabelModelParams p = majority_params(votes, num_classes, std::span<const double>(acc));
    p.accuracies = acc;
    return p;
}

}  // namespace labelforge::lm
