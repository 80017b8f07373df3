#include <algorithm>
#include <numeric>

#include "labelforge/labelmodel/label_models.hpp"

namespace labelforge::lm {

std::vector<int> best_alignment(const std::vector<double>& agreement, int num_classes) {
    const auto K = static_cast<std::size_t>(num_classes);
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    auto score = [&](const std::vector<int>& p) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += agreement[k * K + static_cast<std::size_t>(p[k])];
        return s;
    };
    if (K <= 8) {
        std::vector<int> best = perm;
        double best_score = score(perm);
        while (std::next_permutation(perm.begin(), perm.end())) {
            const double s = score(perm);
            if (s > best_score) {
                best_score = s;
                best = perm;
            }
        }
        return best;
    }
    // Greedy assignment for large K: repeatedly take the largest remaining cell.
    std::vector<int> out(K, -1);
    std::vector<bool> row_used(K, false), col_used(K, false);
    for (std::size_t step = 0; step < K; ++step) {
        double best = -1.0;
        std::size_t br = 0, bc = 0;
        for (std::size_t r = 0; r < K; ++r) {
            if (row_used[r]) continue;
            for (std::size_t c = 0; c < K; ++c) {
                if (col_used[c]) continue;
                if (agreement[r * K + c] > best) {
                    best = agreement[r * K + c];
                    br = r;
                    bc = c;
                }
            }
        }
        out[br] = static_cast<int>(bc);
        row_used[br] = col_used[bc] = true;
    }
    return out;
}

}  // namespace labelforge::lm
