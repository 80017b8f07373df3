#pragma once

#include <filesystem>
#include <vector>

#include "labelforge/core/types.hpp"

namespace labelforge::distill {

struct ExportOptions {
    bool use_probabilistic = false;
    bool drop_uncovered = true;
};

struct ExportReport {
    std::size_t exported = 0;
    std::size_t dropped_uncovered = 0;
};

/// One JSONL row per kept record: {id, text | scores, label, class,
/// posterior?}. Pseudolabels must match records one-to-one by id and order.
ExportReport export_training_set(const std::vector<Record>& records, const std::vector<PseudoLabel>& labels,
                                 const ClassSpace& classes, const ExportOptions& options,
                                 const std::filesystem::path& path);

struct TrainingRow {
    Record record;               // payload only; gold/group unset
    int label = 0;
    std::vector<double> target;  // K entries summing to 1 (one-hot for hard rows)
};

struct TrainingSet {
    std::vector<TrainingRow> rows;
    bool probabilistic = false;
};

/// Throws DataError when a row's label or posterior disagrees with K.
TrainingSet load_training_set(const std::filesystem::path& path, int num_classes);

}  // namespace labelforge::distill
