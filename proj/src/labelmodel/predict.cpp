#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "labelforge/labelmodel/label_models.hpp"

namespace labelforge::lm {

std::vector<PseudoLabel> predict(const LabelModelParams& params, const VoteMatrix& votes) {
    if (params.m() != votes.m())
        throw DimensionError("label model was fitted on " + std::to_string(params.m()) +
                             " programs but the vote matrix has " + std::to_string(votes.m()));
    const int K = params.num_classes;
    detail::check_classes(votes, K);
    const auto Ku = static_cast<std::size_t>(K);

    switch (params.kind) {
        case ModelKind::MV:
        case ModelKind::WMV:
            return majority_vote(votes, K, std::span<const double>(params.weights));
        default: break;
    }

    std::vector<PseudoLabel> out;
    out.reserve(votes.n());
    std::vector<double> lp(Ku);
    std::vector<std::vector<double>> log_conf;
    std::vector<double> log_prior(Ku);
    const bool em_kind = params.kind == ModelKind::DawidSkene || params.kind == ModelKind::SnorkelLite;
    if (em_kind) {
        if (params.confusion.size() != params.m()) throw DimensionError("params carry no confusion matrices");
        for (const auto& c : params.confusion) {
            if (c.size() != Ku * Ku) throw DimensionError("confusion matrix is not K x K");
            std::vector<double> lc(c.size());
            std::transform(c.begin(), c.end(), lc.begin(), [](double x) { return std::log(x); });
            log_conf.push_back(std::move(lc));
        }
        for (std::size_t k = 0; k < Ku; ++k) log_prior[k] = std::log(params.priors.at(k));
    } else if (params.weights.size() != params.m()) {
        throw DimensionError("triplet params carry no log-odds weights");
    }

    for (std::size_t i = 0; i < votes.n(); ++i) {
        bool covered = false;
        if (em_kind) std::copy(log_prior.begin(), log_prior.end(), lp.begin());
        else std::fill(lp.begin(), lp.end(), 0.0);
        for (std::size_t j = 0; j < votes.m(); ++j) {
            const int v = votes.at(i, j);
            if (v == kAbstain) continue;
            covered = true;
            if (em_kind) {
                for (std::size_t k = 0; k < Ku; ++k) lp[k] += log_conf[j][k * Ku + static_cast<std::size_t>(v)];
            } else {
                lp[static_cast<std::size_t>(v)] += params.weights[j];
            }
        }
        const double mx = *std::max_element(lp.begin(), lp.end());
        std::vector<double> post(Ku);
        for (std::size_t k = 0; k < Ku; ++k) post[k] = std::exp(lp[k] - mx);
        out.push_back(make_pseudolabel(detail::record_id(votes, i), std::move(post), covered));
    }
    return out;
}

}  // namespace labelforge::lm
