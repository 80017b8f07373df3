#include <cstdio>
#include <sstream>

#include "labelforge/diagnostics/diagnostics.hpp"

namespace labelforge::diag {

nlohmann::ordered_json analysis_to_json(const std::vector<ProgramStats>& stats, const VoteMatrix& votes,
                                        double coverage_threshold) {
    nlohmann::ordered_json j;
    j["n"] = votes.n();
    j["m"] = votes.m();
    j["coverage_threshold"] = coverage_threshold;
    j["label_coverage"] = label_coverage(votes);
    bool any = false;
    auto programs = nlohmann::ordered_json::array();
    for (const auto& s : stats) {
        nlohmann::ordered_json p;
        p["program_id"] = s.program_id;
        p["coverage"] = s.coverage;
        p["polarity"] = s.polarity;
        p["overlap"] = s.overlap;
        p["conflict"] = s.conflict;
        p["empirical_accuracy"] = s.empirical_accuracy ? nlohmann::ordered_json(*s.empirical_accuracy) : nullptr;
        p["gold_support"] = s.gold_support;
        p["flagged_low_coverage"] = s.flagged_low_coverage;
        any |= s.flagged_low_coverage;
        programs.push_back(std::move(p));
    }
    j["any_flagged"] = any;
    j["programs"] = std::move(programs);
    return j;
}

std::string analysis_table(const std::vector<ProgramStats>& stats, const ClassSpace& classes) {
    std::ostringstream os;
    char line[512];
    std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s  %-20s %s\n", "program", "coverage", "overlap",
                  "conflict", "accuracy", "polarity", "flag");
    os << line;
    for (const auto& s : stats) {
        std::string pol;
        for (int c : s.polarity) {
            if (!pol.empty()) pol += ",";
            pol += classes.contains(c) ? classes.name(c) : std::to_string(c);
        }
        char acc[16] = "-";
        if (s.empirical_accuracy) std::snprintf(acc, sizeof acc, "%.3f", *s.empirical_accuracy);
        std::snprintf(line, sizeof line, "%-24s %8.3f %8.3f %8.3f %8s  %-20s %s\n", s.program_id.c_str(), s.coverage,
                      s.overlap, s.conflict, acc, pol.c_str(), s.flagged_low_coverage ? "LOW-COVERAGE" : "");
        os << line;
    }
    return os.str();
}

nlohmann::ordered_json group_report_to_json(const GroupReport& r) {
    nlohmann::ordered_json j;
    j["average_accuracy"] = r.average_accuracy;
    j["worst_group_accuracy"] = r.worst_group_accuracy;
    j["gap"] = r.gap;
    j["worst_group"] = r.worst_group;
    nlohmann::ordered_json groups = nlohmann::ordered_json::object();
    for (const auto& [g, acc] : r.per_group) {
        groups[g] = {{"accuracy", acc}, {"size", r.group_sizes.at(g)}};
    }
    j["groups"] = std::move(groups);
    return j;
}

}  // namespace labelforge::diag
