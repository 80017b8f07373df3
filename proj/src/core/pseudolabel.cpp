#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/core/pseudolabels.hpp"
#include "labelforge/core/types.hpp"

namespace labelforge {

int argmax_first(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
}

PseudoLabel make_pseudolabel(std::string record_id, std::vector<double> scores, bool covered) {
    PseudoLabel out;
    out.record_id = std::move(record_id);
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    if (!covered || !(total > 0.0)) {
        const double u = scores.empty() ? 0.0 : 1.0 / static_cast<double>(scores.size());
        scores.assign(scores.size(), u);
    } else {
        for (auto& s : scores) s /= total;
    }
    out.posterior = std::move(scores);
    out.hard = argmax_first(out.posterior);
    out.covered = covered;
    return out;
}


void save_pseudolabels(const std::vector<PseudoLabel>& labels, const ClassSpace& classes,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& pl : labels) {
        if (static_cast<int>(pl.posterior.size()) != classes.size())
            throw DimensionError("pseudolabel for '" + pl.record_id + "' has the wrong number of classes");
        nlohmann::ordered_json j;
        j["id"] = pl.record_id;
        j["label"] = pl.hard;
        j["class"] = classes.name(pl.hard);
        j["covered"] = pl.covered;
        j["posterior"] = pl.posterior;
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed for " + path.string());
}

std::vector<PseudoLabel> load_pseudolabels(const std::filesystem::path& path, int num_classes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pseudolabels " + path.string());
    std::vector<PseudoLabel> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        PseudoLabel pl;
        try {
            auto j = nlohmann::json::parse(line);
            pl.record_id = j.at("id").get<std::string>();
            pl.hard = j.at("label").get<int>();
            pl.covered = j.value("covered", true);
            pl.posterior = j.at("posterior").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        }
        if (static_cast<int>(pl.posterior.size()) != num_classes)
            throw DimensionError(where + "posterior has " + std::to_string(pl.posterior.size()) +
                                 " entries, expected " + std::to_string(num_classes));
        if (pl.hard < 0 || pl.hard >= num_classes) throw DataError(where + "label out of range");
        double s = 0.0;
        for (double p : pl.posterior) s += p;
        if (std::abs(s - 1.0) > 1e-6) throw DataError(where + "posterior does not sum to 1");
        out.push_back(std::move(pl));
    }
    return out;
}

}  // namespace labelforge
