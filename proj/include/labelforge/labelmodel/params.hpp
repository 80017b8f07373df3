#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelforge/core/types.hpp"

namespace labelforge::lm {

enum class ModelKind { MV, WMV, DawidSkene, Triplet, SnorkelLite };

std::string_view to_string(ModelKind kind);
/// Accepts the CLI spellings: mv, wmv, ds, triplet, snorkel-lite.
ModelKind parse_model_kind(std::string_view s);

/// K x K row-major matrix; row = latent class, column = emitted class,
/// conditioned on the program not abstaining.
using Confusion = std::vector<double>;

struct LabelModelParams {
    ModelKind kind = ModelKind::MV;
    int num_classes = 2;
    std::vector<std::string> class_names;
    std::vector<std::string> program_ids;
    std::vector<double> priors;
    std::vector<Confusion> confusion;   // DawidSkene, SnorkelLite
    std::vector<double> propensity;     // P(non-abstain); recorded, not used in the posterior
    std::vector<double> accuracies;     // WMV, Triplet (clamped); SnorkelLite (unclamped one-coin)
    std::vector<double> weights;        // MV/WMV vote weights; Triplet log-odds

    [[nodiscard]] std::size_t m() const { return program_ids.size(); }
    [[nodiscard]] double conf(std::size_t j, int latent, int emitted) const {
        return confusion[j][static_cast<std::size_t>(latent * num_classes + emitted)];
    }
};

struct FitReport {
    int iterations = 0;
    bool converged = false;
    /// Observed-data log-likelihood after each E-step (EM kinds).
    std::vector<double> log_likelihood_trace;
    /// Log-likelihood plus the log-density of the smoothing pseudo-counts;
    /// the quantity EM with additive smoothing maximizes.
    std::vector<double> objective_trace;
    double final_log_likelihood = 0.0;
    /// Per-program accuracy summary: diagonal mass weighted by priors, or the scalar accuracy.
    std::vector<double> program_accuracy;
    /// Latent-class relabeling applied after fitting (identity when empty).
    std::vector<int> alignment;
    /// Triplet only: number of triplets used per program.
    std::vector<std::size_t> triplets_used;
};

struct FitResult {
    LabelModelParams params;
    FitReport report;
};

struct EmConfig {
    int max_iter = 200;
    double tol = 1e-6;
    double smoothing = 0.01;
};

struct TripletConfig {
    double clamp_low = 0.05;
    double clamp_high = 0.95;
    /// Pairwise moments need at least this many jointly covered items.
    std::size_t min_pairs = 10;
    /// Triplets whose denominator moment is smaller in magnitude are skipped
    /// while better-conditioned triplets exist for the program.
    double min_abs_denominator = 0.1;
};

inline constexpr double kAccuracyLow = 0.05;
inline constexpr double kAccuracyHigh = 0.95;

void save_params(const LabelModelParams& params, const std::filesystem::path& path);
LabelModelParams load_params(const std::filesystem::path& path);

}  // namespace labelforge::lm
