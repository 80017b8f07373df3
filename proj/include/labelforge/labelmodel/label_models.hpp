#pragma once

#include <optional>
#include <span>
#include <vector>

#include "labelforge/core/types.hpp"
#include "labelforge/core/votes.hpp"
#include "labelforge/labelmodel/params.hpp"

namespace labelforge::lm {

/// Posterior proportional to the weighted count of votes per class. Weights
/// default to 1 and must be positive.
std::vector<PseudoLabel> majority_vote(const VoteMatrix& votes, int num_classes,
                                       std::optional<std::span<const double>> weights = std::nullopt);

/// MV params (unit weights) or WMV params with explicit weights.
LabelModelParams majority_params(const VoteMatrix& votes, int num_classes,
                                 std::optional<std::span<const double>> weights = std::nullopt);

/// WMV with weights set to each program's clamped accuracy, measured against
/// gold where available and against the unweighted majority otherwise.
LabelModelParams fit_weighted_majority(const VoteMatrix& votes, int num_classes,
                                       const std::vector<std::optional<int>>* gold = nullptr);

/// Full-confusion EM over non-abstain votes.
FitResult fit_dawid_skene(const VoteMatrix& votes, int num_classes, const EmConfig& config = {});

/// Same EM with one accuracy per program and errors spread evenly over the
/// other classes.
FitResult fit_snorkel_lite(const VoteMatrix& votes, int num_classes, const EmConfig& config = {});

/// Binary moment estimator over program triplets; aggregation by log-odds
/// weighted vote.
FitResult fit_triplet(const VoteMatrix& votes, int num_classes, const TripletConfig& config = {});

/// Pseudolabels under fitted params. Rows where every program abstains are
/// uncovered and get the uniform posterior.
std::vector<PseudoLabel> predict(const LabelModelParams& params, const VoteMatrix& votes);

/// Permutation pi maximizing sum_k agreement[k][pi[k]] (K x K row-major).
std::vector<int> best_alignment(const std::vector<double>& agreement, int num_classes);

/// Hard labels of the unweighted majority vote, kAbstain on uncovered rows.
std::vector<int> plurality_labels(const VoteMatrix& votes, int num_classes);

}  // namespace labelforge::lm
