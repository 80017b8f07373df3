#include "labelforge/distill/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "labelforge/core/error.hpp"
#include "labelforge/kernels/kernels.hpp"

namespace labelforge::distill {

namespace {

constexpr std::size_t H = Mlp::kHidden;
constexpr double kOutputInitStd = 0.01;

void softmax_inplace(std::vector<double>& z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        s += v;
    }
    for (double& v : z) v /= s;
}

}  // namespace

Mlp::Mlp(std::size_t input_dim, int num_classes, std::uint64_t seed) : d_(input_dim), K_(num_classes) {
    if (input_dim == 0) throw ValidationError("input dimension must be positive");
    if (num_classes < 2) throw ValidationError("need at least two classes");
    params_.assign(b3() + static_cast<std::size_t>(K_), 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(d_)));
    std::normal_distribution<double> n2(0.0, std::sqrt(2.0 / static_cast<double>(H)));
    std::normal_distribution<double> n3(0.0, kOutputInitStd);
    for (std::size_t i = w1(); i < b1(); ++i) params_[i] = n1(rng);
    for (std::size_t i = w2(); i < b2(); ++i) params_[i] = n2(rng);
    for (std::size_t i = w3(); i < b3(); ++i) params_[i] = n3(rng);
}

Mlp Mlp::from_params(std::size_t input_dim, int num_classes, std::vector<double> params) {
    Mlp m;
    m.d_ = input_dim;
    m.K_ = num_classes;
    if (params.size() != m.b3() + static_cast<std::size_t>(num_classes))
        throw DimensionError("parameter count " + std::to_string(params.size()) + " does not fit layer sizes");
    for (double v : params)
        if (!std::isfinite(v)) throw ValidationError("model parameters must be finite");
    m.params_ = std::move(params);
    return m;
}

void Mlp::forward(const SparseRow& x, Activations& act) const {
    const auto& k = kernels::active();
    const double* P = params_.data();
    act.z1.assign(P + b1(), P + b1() + H);
    for (std::size_t t = 0; t < x.index.size(); ++t) {
        const std::size_t j = x.index[t];
        if (j >= d_) throw DimensionError("feature index " + std::to_string(j) + " exceeds input dimension");
        k.axpy(x.value[t], P + w1() + j * H, act.z1.data(), H);
    }
    act.a1.resize(H);
    for (std::size_t i = 0; i < H; ++i) act.a1[i] = act.z1[i] > 0.0 ? act.z1[i] : 0.0;
    act.z2.resize(H);
    k.gemv(P + w2(), act.a1.data(), P + b2(), act.z2.data(), H, H);
    act.a2.resize(H);
    for (std::size_t i = 0; i < H; ++i) act.a2[i] = act.z2[i] > 0.0 ? act.z2[i] : 0.0;
    act.p.resize(static_cast<std::size_t>(K_));
    k.gemv(P + w3(), act.a2.data(), P + b3(), act.p.data(), static_cast<std::size_t>(K_), H);
    softmax_inplace(act.p);
}

std::vector<double> Mlp::predict_proba(const SparseRow& x) const {
    Activations a;
    forward(x, a);
    return a.p;
}

int Mlp::predict(const SparseRow& x) const { return argmax_first(predict_proba(x)); }

double Mlp::loss_and_gradient(std::span<const SparseRow> xs, std::span<const std::vector<double>> targets,
                              std::vector<double>* grad) const {
    if (xs.size() != targets.size()) throw DimensionError("batch inputs and targets differ in length");
    if (xs.empty()) throw ValidationError("empty batch");
    const auto& k = kernels::active();
    const std::size_t K = static_cast<std::size_t>(K_);
    if (grad) grad->assign(params_.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(xs.size());
    const double* P = params_.data();
    Activations act;
    std::vector<double> dz3(K), dz2(H), dz1(H);
    double loss = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        const auto& t = targets[s];
        if (t.size() != K) throw DimensionError("target has the wrong number of classes");
        forward(xs[s], act);
        for (std::size_t c = 0; c < K; ++c)
            if (t[c] > 0.0) loss -= t[c] * std::log(std::max(act.p[c], 1e-300));
        if (!grad) continue;
        double* G = grad->data();
        double tsum = 0.0;
        for (double v : t) tsum += v;
        for (std::size_t c = 0; c < K; ++c) dz3[c] = (act.p[c] * tsum - t[c]) * inv;
        for (std::size_t c = 0; c < K; ++c) {
            k.axpy(dz3[c], act.a2.data(), G + w3() + c * H, H);
            G[b3() + c] += dz3[c];
        }
        std::fill(dz2.begin(), dz2.end(), 0.0);
        for (std::size_t c = 0; c < K; ++c) k.axpy(dz3[c], P + w3() + c * H, dz2.data(), H);
        for (std::size_t i = 0; i < H; ++i)
            if (act.z2[i] <= 0.0) dz2[i] = 0.0;
        for (std::size_t i = 0; i < H; ++i) {
            if (dz2[i] == 0.0) continue;
            k.axpy(dz2[i], act.a1.data(), G + w2() + i * H, H);
            G[b2() + i] += dz2[i];
        }
        std::fill(dz1.begin(), dz1.end(), 0.0);
        for (std::size_t i = 0; i < H; ++i)
            if (dz2[i] != 0.0) k.axpy(dz2[i], P + w2() + i * H, dz1.data(), H);
        for (std::size_t i = 0; i < H; ++i)
            if (act.z1[i] <= 0.0) dz1[i] = 0.0;
        k.axpy(1.0, dz1.data(), G + b1(), H);
        const auto& x = xs[s];
        for (std::size_t u = 0; u < x.index.size(); ++u)
            k.axpy(x.value[u], dz1.data(), G + w1() + x.index[u] * H, H);
    }
    return loss * inv;
}

double accuracy(const Mlp& model, const std::vector<SparseRow>& xs, const std::vector<int>& labels) {
    if (xs.size() != labels.size()) throw DimensionError("inputs and labels differ in length");
    if (xs.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) hit += model.predict(xs[i]) == labels[i];
    return static_cast<double>(hit) / static_cast<double>(xs.size());
}

TrainResult train_mlp(const std::vector<SparseRow>& train_x, const std::vector<std::vector<double>>& train_targets,
                      const std::vector<SparseRow>& val_x, const std::vector<int>& val_labels, std::size_t input_dim,
                      int num_classes, const TrainConfig& cfg) {
    if (train_x.empty()) throw ValidationError("training set is empty");
    if (train_x.size() != train_targets.size()) throw DimensionError("training inputs and targets differ in length");
    if (cfg.epochs < 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0))
        throw ValidationError("epochs, batch size and learning rate must be positive");
    const std::size_t K = static_cast<std::size_t>(num_classes);

    std::vector<int> train_labels(train_x.size());
    std::vector<double> mass(K, 0.0);
    for (std::size_t i = 0; i < train_x.size(); ++i) {
        const auto& t = train_targets[i];
        if (t.size() != K) throw DimensionError("target has the wrong number of classes");
        double s = 0.0;
        for (double v : t) s += v;
        if (std::abs(s - 1.0) > 1e-6) throw ValidationError("training targets must sum to 1");
        train_labels[i] = argmax_first(t);
        for (std::size_t c = 0; c < K; ++c) mass[c] += t[c];
    }

    TrainResult res;
    res.model = Mlp(input_dim, num_classes, cfg.seed);
    res.initial_loss = res.model.loss_and_gradient(train_x, train_targets, nullptr);

    const auto present = std::count_if(mass.begin(), mass.end(), [](double m) { return m > 0.0; });
    if (present == 1) {
        spdlog::warn("training set has a single class; fitting a constant predictor");
        auto& P = res.model.params();
        std::fill(P.begin() + static_cast<std::ptrdiff_t>(res.model.w3()), P.end(), 0.0);
        const auto only = static_cast<std::size_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
        P[res.model.b3() + only] = 10.0;
        res.constant_baseline = true;
        EpochMetrics m;
        m.epoch = 0;
        m.train_loss = res.model.loss_and_gradient(train_x, train_targets, nullptr);
        m.train_accuracy = accuracy(res.model, train_x, train_labels);
        if (!val_x.empty()) m.validation_accuracy = accuracy(res.model, val_x, val_labels);
        res.history.push_back(m);
        return res;
    }

    auto& P = res.model.params();
    std::vector<double> m1(P.size(), 0.0), m2(P.size(), 0.0), grad;
    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<SparseRow> bx;
    std::vector<std::vector<double>> bt;
    long long step = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            bx.clear();
            bt.clear();
            for (std::size_t i = start; i < end; ++i) {
                bx.push_back(train_x[order[i]]);
                bt.push_back(train_targets[order[i]]);
            }
            loss_sum += res.model.loss_and_gradient(bx, bt, &grad);
            ++batches;
            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < P.size(); ++p) {
                const double g = grad[p];
                m1[p] = cfg.beta1 * m1[p] + (1.0 - cfg.beta1) * g;
                m2[p] = cfg.beta2 * m2[p] + (1.0 - cfg.beta2) * g * g;
                P[p] -= cfg.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + cfg.epsilon);
            }
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(batches);
        m.train_accuracy = accuracy(res.model, train_x, train_labels);
        if (!val_x.empty()) m.validation_accuracy = accuracy(res.model, val_x, val_labels);
        res.history.push_back(m);
    }
    for (double v : P)
        if (!std::isfinite(v)) throw Error("training diverged: non-finite parameters");
    return res;
}

double gradient_check(const Mlp& model, std::span<const SparseRow> xs, std::span<const std::vector<double>> targets,
                      double h, std::size_t samples, std::uint64_t seed) {
    if (xs.empty()) throw ValidationError("gradient check needs a non-empty batch");
    std::vector<double> grad;
    model.loss_and_gradient(xs, targets, &grad);
    Mlp probe = model;
    auto& P = probe.params();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, P.size() - 1);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t i = pick(rng);
        const double orig = P[i];
        P[i] = orig + h;
        const double up = probe.loss_and_gradient(xs, targets, nullptr);
        P[i] = orig - h;
        const double down = probe.loss_and_gradient(xs, targets, nullptr);
        P[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::abs(grad[i] - numeric) / std::max(std::abs(grad[i]) + std::abs(numeric), 1e-6);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace labelforge::distill
