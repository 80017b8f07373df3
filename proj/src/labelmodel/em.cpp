#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common.hpp"
#include "labelforge/labelmodel/label_models.hpp"

namespace labelforge::lm {

namespace {

enum class Tying { Full, OneCoin };

double log_sum_exp(const double* v, std::size_t k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, v[c]);
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(v[c] - mx);
    return mx + std::log(s);
}

void one_coin_confusion(double acc, int K, Confusion& out) {
    const auto k = static_cast<std::size_t>(K);
    out.assign(k * k, (1.0 - acc) / (K - 1));
    for (std::size_t c = 0; c < k; ++c) out[c * k + c] = acc;
}

FitResult run_em(const VoteMatrix& votes, int num_classes, const EmConfig& cfg, Tying tying) {
    detail::check_classes(votes, num_classes);
    if (votes.n() == 0) throw ValidationError("cannot fit a label model on an empty vote matrix");
    if (votes.m() == 0) throw ValidationError("cannot fit a label model without programs");
    if (cfg.smoothing < 0.0 || cfg.tol <= 0.0 || cfg.max_iter < 1) throw ValidationError("invalid EM config");
    const auto cov = detail::coverage(votes);
    for (std::size_t j = 0; j < votes.m(); ++j)
        if (cov[j] == 0.0)
            throw ValidationError("program '" + votes.program_ids()[j] +
                                  "' abstains on every record; remove it before fitting (see analyze)");

    const std::size_t n = votes.n(), m = votes.m(), K = static_cast<std::size_t>(num_classes);
    const double s = cfg.smoothing;
    const double Kd = static_cast<double>(K);
    // Initial posteriors stay strictly positive even without smoothing.
    const double init_s = s > 0.0 ? s : 1e-3;

    std::vector<double> q(n * K), q_new(n * K);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> cnt(K, 0.0);
        double total = 0.0;
        for (int v : votes.row(i))
            if (v != kAbstain) {
                cnt[static_cast<std::size_t>(v)] += 1.0;
                total += 1.0;
            }
        for (std::size_t k = 0; k < K; ++k)
            q[i * K + k] = total > 0 ? (cnt[k] + init_s) / (total + Kd * init_s) : 1.0 / Kd;
    }

    std::vector<double> priors(K);
    std::vector<Confusion> conf(m, Confusion(K * K));
    std::vector<double> acc(m, 0.0);
    std::vector<Confusion> log_conf(m, Confusion(K * K));
    std::vector<double> lp(K);

    FitReport report;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        // M-step
        std::fill(priors.begin(), priors.end(), s);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < K; ++k) priors[k] += q[i * K + k];
        for (auto& p : priors) p /= static_cast<double>(n) + Kd * s;

        if (tying == Tying::Full) {
            for (std::size_t j = 0; j < m; ++j) {
                auto& c = conf[j];
                std::fill(c.begin(), c.end(), s);
                for (std::size_t i = 0; i < n; ++i) {
                    const int v = votes.at(i, j);
                    if (v == kAbstain) continue;
                    for (std::size_t k = 0; k < K; ++k) c[k * K + static_cast<std::size_t>(v)] += q[i * K + k];
                }
                for (std::size_t k = 0; k < K; ++k) {
                    double row = 0.0;
                    for (std::size_t l = 0; l < K; ++l) row += c[k * K + l];
                    for (std::size_t l = 0; l < K; ++l) c[k * K + l] /= row;
                }
            }
        } else {
            for (std::size_t j = 0; j < m; ++j) {
                double correct = 0.0, total = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const int v = votes.at(i, j);
                    if (v == kAbstain) continue;
                    correct += q[i * K + static_cast<std::size_t>(v)];
                    total += 1.0;
                }
                acc[j] = (correct + s) / (total + 2.0 * s);
                one_coin_confusion(acc[j], num_classes, conf[j]);
            }
        }

        // E-step
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t c = 0; c < K * K; ++c) log_conf[j][c] = std::log(conf[j][c]);
        double ll = 0.0, delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < K; ++k) lp[k] = std::log(priors[k]);
            for (std::size_t j = 0; j < m; ++j) {
                const int v = votes.at(i, j);
                if (v == kAbstain) continue;
                for (std::size_t k = 0; k < K; ++k) lp[k] += log_conf[j][k * K + static_cast<std::size_t>(v)];
            }
            const double lse = log_sum_exp(lp.data(), K);
            ll += lse;
            for (std::size_t k = 0; k < K; ++k) {
                const double nq = std::exp(lp[k] - lse);
                delta = std::max(delta, std::abs(nq - q[i * K + k]));
                q_new[i * K + k] = nq;
            }
        }
        double penalty = 0.0;
        for (double p : priors) penalty += std::log(p);
        if (tying == Tying::Full) {
            for (const auto& c : log_conf)
                for (double x : c) penalty += x;
        } else {
            for (double a : acc) penalty += std::log(a) + std::log1p(-a);
        }
        report.log_likelihood_trace.push_back(ll);
        report.objective_trace.push_back(ll + s * penalty);
        report.iterations = it;
        std::swap(q, q_new);
        if (delta < cfg.tol) {
            report.converged = true;
            break;
        }
    }
    report.final_log_likelihood = report.log_likelihood_trace.back();

    // Align latent classes with the plurality vote. The one-coin form ties
    // latent and emitted classes already, so only full confusions move.
    const auto plural = plurality_labels(votes, num_classes);
    std::vector<double> agreement(K * K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (plural[i] == kAbstain) continue;
        for (std::size_t k = 0; k < K; ++k) agreement[k * K + static_cast<std::size_t>(plural[i])] += q[i * K + k];
    }
    auto perm = best_alignment(agreement, num_classes);
    if (tying == Tying::OneCoin) std::iota(perm.begin(), perm.end(), 0);
    bool identity = true;
    for (std::size_t k = 0; k < K; ++k) identity &= perm[k] == static_cast<int>(k);
    if (!identity) {
        std::vector<double> new_priors(K);
        for (std::size_t k = 0; k < K; ++k) new_priors[static_cast<std::size_t>(perm[k])] = priors[k];
        priors = std::move(new_priors);
        for (auto& c : conf) {
            Confusion nc(K * K);
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t l = 0; l < K; ++l) nc[static_cast<std::size_t>(perm[k]) * K + l] = c[k * K + l];
            c = std::move(nc);
        }
        report.alignment = perm;
    }

    FitResult out;
    auto& p = out.params;
    p.kind = tying == Tying::Full ? ModelKind::DawidSkene : ModelKind::SnorkelLite;
    p.num_classes = num_classes;
    p.program_ids = votes.program_ids();
    p.priors = priors;
    p.confusion = conf;
    p.propensity = cov;
    if (tying == Tying::OneCoin) p.accuracies = acc;
    report.program_accuracy.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (tying == Tying::OneCoin) {
            report.program_accuracy[j] = acc[j];
            continue;
        }
        double a = 0.0;
        for (std::size_t k = 0; k < K; ++k) a += priors[k] * conf[j][k * K + k];
        report.program_accuracy[j] = a;
    }
    out.report = std::move(report);
    return out;
}

}  // namespace

FitResult fit_dawid_skene(const VoteMatrix& votes, int num_classes, const EmConfig& config) {
    return run_em(votes, num_classes, config, Tying::Full);
}

FitResult fit_snorkel_lite(const VoteMatrix& votes, int num_classes, const EmConfig& config) {
    return run_em(votes, num_classes, config, Tying::OneCoin);
}

}  // namespace labelforge::lm
