#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labelforge/distill/features.hpp"

namespace labelforge::distill {

/// [d, 32, 32, K] ReLU network with a softmax output, parameters in one flat
/// buffer: W1 (d x H, input-major so sparse rows touch only their own
/// rows), b1, W2 (H x H, output-major), b2, W3 (K x H), b3.
class Mlp {
public:
    static constexpr std::size_t kHidden = 32;

    Mlp() = default;
    /// He-normal hidden layers; the output layer starts near zero so the
    /// initial prediction is close to uniform.
    Mlp(std::size_t input_dim, int num_classes, std::uint64_t seed);

    [[nodiscard]] std::size_t input_dim() const { return d_; }
    [[nodiscard]] int num_classes() const { return K_; }
    [[nodiscard]] std::vector<std::size_t> layer_sizes() const { return {d_, kHidden, kHidden, static_cast<std::size_t>(K_)}; }

    [[nodiscard]] std::vector<double>& params() { return params_; }
    [[nodiscard]] const std::vector<double>& params() const { return params_; }

    [[nodiscard]] std::vector<double> predict_proba(const SparseRow& x) const;
    [[nodiscard]] int predict(const SparseRow& x) const;

    /// Mean soft-target cross-entropy over the batch; fills `grad` (same
    /// layout as params) when non-null.
    double loss_and_gradient(std::span<const SparseRow> xs, std::span<const std::vector<double>> targets,
                             std::vector<double>* grad) const;

    // Offsets into params().
    [[nodiscard]] std::size_t w1() const { return 0; }
    [[nodiscard]] std::size_t b1() const { return d_ * kHidden; }
    [[nodiscard]] std::size_t w2() const { return b1() + kHidden; }
    [[nodiscard]] std::size_t b2() const { return w2() + kHidden * kHidden; }
    [[nodiscard]] std::size_t w3() const { return b2() + kHidden; }
    [[nodiscard]] std::size_t b3() const { return w3() + static_cast<std::size_t>(K_) * kHidden; }

    static Mlp from_params(std::size_t input_dim, int num_classes, std::vector<double> params);

private:
    struct Activations {
        std::vector<double> z1, a1, z2, a2, p;
    };
    void forward(const SparseRow& x, Activations& act) const;

    std::size_t d_ = 0;
    int K_ = 0;
    std::vector<double> params_;
};

struct TrainConfig {
    int epochs = 100;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;  // mean loss over the epoch's minibatches
    double train_accuracy = 0.0;
    std::optional<double> validation_accuracy;
};

struct TrainResult {
    Mlp model;
    double initial_loss = 0.0;  // full training set, before the first update
    std::vector<EpochMetrics> history;
    bool constant_baseline = false;
};

/// Adam on soft-target cross-entropy. Targets must each sum to 1. With a
/// single class present the network is not trained: it predicts that class.
TrainResult train_mlp(const std::vector<SparseRow>& train_x, const std::vector<std::vector<double>>& train_targets,
                      const std::vector<SparseRow>& val_x, const std::vector<int>& val_labels, std::size_t input_dim,
                      int num_classes, const TrainConfig& config);

double accuracy(const Mlp& model, const std::vector<SparseRow>& xs, const std::vector<int>& labels);

/// Max relative error between analytic and central-difference gradients
/// over `samples` randomly chosen parameters:
/// |a - n| / max(|a| + |n|, 1e-6).
double gradient_check(const Mlp& model, std::span<const SparseRow> xs, std::span<const std::vector<double>> targets,
                      double h = 1e-5, std::size_t samples = 200, std::uint64_t seed = 7);

struct SavedModel {
    Mlp model;
    FeatureSpec features;
    std::vector<std::string> class_names;
};

void save_model(const SavedModel& m, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);
void save_metrics_csv(const std::vector<EpochMetrics>& history, const std::filesystem::path& path);

}  // namespace labelforge::distill
