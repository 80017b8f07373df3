#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "labelforge/labelmodel/label_models.hpp"

namespace labelforge::lm {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

FitResult fit_triplet(const VoteMatrix& votes, int num_classes, const TripletConfig& cfg) {
    if (num_classes != 2)
        throw ValidationError("the triplet estimator supports binary tasks only (got " + std::to_string(num_classes) +
                              " classes)");
    detail::check_classes(votes, num_classes);
    const std::size_t m = votes.m(), n = votes.n();
    if (m < 3) throw ValidationError("the triplet estimator needs at least 3 programs");
    if (!(cfg.clamp_low > 0.0 && cfg.clamp_low < cfg.clamp_high && cfg.clamp_high < 1.0))
        throw ValidationError("triplet clamp bounds must satisfy 0 < low < high < 1");

    // Pairwise second moments of the +-1 votes over jointly covered rows.
    std::vector<double> sum(m * m, 0.0);
    std::vector<std::size_t> count(m * m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = votes.row(i);
        for (std::size_t a = 0; a < m; ++a) {
            if (row[a] == kAbstain) continue;
            const double la = row[a] == 1 ? 1.0 : -1.0;
            for (std::size_t b = a + 1; b < m; ++b) {
                if (row[b] == kAbstain) continue;
                const double lb = row[b] == 1 ? 1.0 : -1.0;
                sum[a * m + b] += la * lb;
                ++count[a * m + b];
            }
        }
    }
    std::vector<double> moment(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            const std::size_t c = count[a * m + b];
            const double v = c ? sum[a * m + b] / static_cast<double>(c) : 0.0;
            moment[a * m + b] = moment[b * m + a] = v;
            count[b * m + a] = c;
        }
    auto enough = [&](std::size_t a, std::size_t b) { return count[a * m + b] >= cfg.min_pairs; };

    FitReport report;
    report.triplets_used.assign(m, 0);
    std::vector<double> magnitude(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> good, all;
        double best_den = 0.0, best_value = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            if (a == j) continue;
            for (std::size_t b = a + 1; b < m; ++b) {
                if (b == j) continue;
                if (!enough(j, a) || !enough(j, b) || !enough(a, b)) continue;
                const double den = moment[a * m + b];
                if (den == 0.0) continue;
                const double value = moment[j * m + a] * moment[j * m + b] / den;
                all.push_back(value);
                if (std::abs(den) >= cfg.min_abs_denominator) good.push_back(value);
                if (std::abs(den) > best_den) {
                    best_den = std::abs(den);
                    best_value = value;
                }
            }
        }
        if (all.empty())
            throw ValidationError("program '" + votes.program_ids()[j] + "': every triplet has fewer than " +
                                  std::to_string(cfg.min_pairs) + " jointly covered items");
        if (good.empty()) good.push_back(best_value);
        report.triplets_used[j] = good.size();
        magnitude[j] = std::min(1.0, std::sqrt(std::max(0.0, median(good))));
    }

    // Signs: consistent with the pairwise moments, then oriented so that
    // programs are better than random on balance.
    std::vector<double> sign(m, 1.0);
    for (int sweep = 0; sweep < 50; ++sweep) {
        bool changed = false;
        for (std::size_t j = 0; j < m; ++j) {
            double t = 0.0;
            for (std::size_t a = 0; a < m; ++a)
                if (a != j && enough(j, a)) t += moment[j * m + a] * sign[a] * magnitude[a];
            const double s = t >= 0.0 ? 1.0 : -1.0;
            if (s != sign[j]) {
                sign[j] = s;
                changed = true;
            }
        }
        if (!changed) break;
    }
    double orient = 0.0;
    for (std::size_t j = 0; j < m; ++j) orient += sign[j] * magnitude[j];
    if (orient < 0.0)
        for (auto& s : sign) s = -s;

    FitResult out;
    auto& p = out.params;
    p.kind = ModelKind::Triplet;
    p.num_classes = 2;
    p.program_ids = votes.program_ids();
    p.priors = {0.5, 0.5};
    p.propensity = detail::coverage(votes);
    p.accuracies.resize(m);
    p.weights.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double a = std::clamp(0.5 * (1.0 + sign[j] * magnitude[j]), cfg.clamp_low, cfg.clamp_high);
        p.accuracies[j] = a;
        p.weights[j] = std::log(a / (1.0 - a));
    }
    report.program_accuracy = p.accuracies;
    report.converged = true;
    out.report = std::move(report);
    return out;
}

}  // namespace labelforge::lm
