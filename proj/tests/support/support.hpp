#pragma once

// Shared fixtures for the unit and acceptance tests: temporary directories
// and samplers for planted label-model synthetics.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "labelforge/core/votes.hpp"

namespace lf_test {

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "labelforge-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Planted {
    labelforge::VoteMatrix votes;
    std::vector<int> truth;
};

inline int sample_index(std::mt19937_64& rng, const std::vector<double>& probs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng), acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (r < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
}

/// confusion[j] is K x K row-major: P(vote = l | truth = k); propensity[j] is
/// P(non-abstain), independently of everything else.
inline Planted sample_dawid_skene(std::size_t n, int K, const std::vector<std::vector<double>>& confusion,
                                  const std::vector<double>& priors, const std::vector<double>& propensity,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t m = confusion.size();
    Planted p{labelforge::VoteMatrix(n, m, {}), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const int y = sample_index(rng, priors);
        p.truth[i] = y;
        for (std::size_t j = 0; j < m; ++j) {
            if (u(rng) >= propensity[j]) continue;
            std::vector<double> row(confusion[j].begin() + y * K, confusion[j].begin() + (y + 1) * K);
            p.votes.set(i, j, sample_index(rng, row));
        }
    }
    return p;
}

inline std::vector<double> one_coin(double a, int K) {
    std::vector<double> c(static_cast<std::size_t>(K * K), (1.0 - a) / (K - 1));
    for (int k = 0; k < K; ++k) c[static_cast<std::size_t>(k * K + k)] = a;
    return c;
}

/// Binary, balanced classes, program j correct with probability acc[j].
inline Planted sample_binary(std::size_t n, const std::vector<double>& acc, std::uint64_t seed,
                             double propensity = 1.0) {
    std::vector<std::vector<double>> conf;
    for (double a : acc) conf.push_back(one_coin(a, 2));
    return sample_dawid_skene(n, 2, conf, {0.5, 0.5}, std::vector<double>(acc.size(), propensity), seed);
}

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += pred[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace lf_test
