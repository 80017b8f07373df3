#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "labelforge/core/types.hpp"
#include "labelforge/core/votes.hpp"

namespace labelforge::diag {

inline constexpr double kDefaultCoverageThreshold = 0.10;

/// Per-program quality summary. All fractions are over the whole dataset.
struct ProgramStats {
    std::string program_id;
    double coverage = 0.0;
    std::vector<int> polarity;  // sorted distinct emitted classes
    double overlap = 0.0;
    double conflict = 0.0;
    std::optional<double> empirical_accuracy;
    std::size_t gold_support = 0;  // rows used for empirical_accuracy
    bool flagged_low_coverage = false;
};

std::vector<ProgramStats> analyze(const VoteMatrix& votes, const std::vector<std::optional<int>>* gold = nullptr,
                                  double coverage_threshold = kDefaultCoverageThreshold);

/// Fraction of rows with at least one non-abstain vote.
double label_coverage(const VoteMatrix& votes);

/// Fraction of pseudolabels with covered=true (0 for an empty list).
double coverage_of_label_model(const std::vector<PseudoLabel>& pseudolabels);

struct GroupReport {
    double average_accuracy = 0.0;      // record-weighted
    double worst_group_accuracy = 0.0;
    double gap = 0.0;                   // average - worst, as computed from the two fields
    std::string worst_group;
    std::map<std::string, double> per_group;
    std::map<std::string, std::size_t> group_sizes;
};

GroupReport group_metrics(const std::vector<int>& predictions, const std::vector<int>& gold,
                          const std::vector<std::string>& groups);

nlohmann::ordered_json analysis_to_json(const std::vector<ProgramStats>& stats, const VoteMatrix& votes,
                                        double coverage_threshold);
std::string analysis_table(const std::vector<ProgramStats>& stats, const ClassSpace& classes);
nlohmann::ordered_json group_report_to_json(const GroupReport& report);

}  // namespace labelforge::diag
