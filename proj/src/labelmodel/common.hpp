#pragma once

#include <string>
#include <vector>

#include "labelforge/core/error.hpp"
#include "labelforge/core/votes.hpp"

namespace labelforge::lm::detail {

inline std::string record_id(const VoteMatrix& votes, std::size_t i) {
    return votes.record_ids().empty() ? std::to_string(i) : votes.record_ids()[i];
}

inline bool row_covered(const VoteMatrix& votes, std::size_t i) {
    for (int v : votes.row(i))
        if (v != kAbstain) return true;
    return false;
}

inline std::vector<double> coverage(const VoteMatrix& votes) {
    std::vector<double> cov(votes.m(), 0.0);
    if (votes.n() == 0) return cov;
    for (std::size_t i = 0; i < votes.n(); ++i)
        for (std::size_t j = 0; j < votes.m(); ++j)
            if (votes.at(i, j) != kAbstain) cov[j] += 1.0;
    for (auto& c : cov) c /= static_cast<double>(votes.n());
    return cov;
}

inline void check_classes(const VoteMatrix& votes, int num_classes) {
    if (num_classes < 2) throw ValidationError("label models need at least 2 classes");
    votes.validate(num_classes);
}

}  // namespace labelforge::lm::detail
