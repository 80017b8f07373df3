#pragma once

#include <chrono>
#include <vector>

#include "labelforge/core/types.hpp"
#include "labelforge/core/votes.hpp"
#include "labelforge/dsl/ast.hpp"

namespace labelforge::dsl {

/// Raised when a program cannot run on a record (modality mismatch,
/// missing score). Validated programs on matching records never raise it.
class EvaluationError : public Error {
public:
    using Error::Error;
};

struct EvalOptions {
    /// Per-record budget; on expiry the program abstains on that record.
    std::chrono::microseconds budget{50'000};
};

/// First rule whose guard holds, else the program default.
int evaluate(const LabelingProgram& program, const Record& record, const EvalOptions& options = {});

struct AssembleOptions {
    EvalOptions eval;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// votes[i][j] = evaluate(programs[j], records[i]). Rows are partitioned over
/// worker threads; the result does not depend on the schedule.
VoteMatrix assemble_votes(const std::vector<Record>& records, const std::vector<LabelingProgram>& programs,
                          const AssembleOptions& options = {});

}  // namespace labelforge::dsl
