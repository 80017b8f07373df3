#include "labelforge/distill/export.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/core/error.hpp"

namespace labelforge::distill {

ExportReport export_training_set(const std::vector<Record>& records, const std::vector<PseudoLabel>& labels,
                                 const ClassSpace& classes, const ExportOptions& options,
                                 const std::filesystem::path& path) {
    if (records.size() != labels.size())
        throw DimensionError("have " + std::to_string(records.size()) + " records but " +
                             std::to_string(labels.size()) + " pseudolabels");
    const int K = static_cast<int>(classes.size());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    ExportReport rep;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& pl = labels[i];
        if (r.id != pl.record_id)
            throw ValidationError("row " + std::to_string(i + 1) + ": record id '" + r.id +
                                  "' does not match pseudolabel id '" + pl.record_id + "'");
        if (static_cast<int>(pl.posterior.size()) != K)
            throw DimensionError("pseudolabel for '" + r.id + "' has " + std::to_string(pl.posterior.size()) +
                                 " classes, expected " + std::to_string(K));
        if (!pl.covered && options.drop_uncovered) {
            ++rep.dropped_uncovered;
            continue;
        }
        nlohmann::ordered_json j;
        j["id"] = r.id;
        if (r.modality() == Modality::Text)
            j["text"] = r.text();
        else
            j["scores"] = r.scores().values;
        j["label"] = pl.hard;
        j["class"] = classes.name(pl.hard);
        if (options.use_probabilistic) j["posterior"] = pl.posterior;
        out << j.dump() << "\n";
        ++rep.exported;
    }
    if (!out) throw DataError("write failed for " + path.string());
    if (rep.dropped_uncovered) spdlog::info("dropped {} uncovered record(s)", rep.dropped_uncovered);
    return rep;
}

TrainingSet load_training_set(const std::filesystem::path& path, int K) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open training set " + path.string());
    TrainingSet ts;
    bool first = true;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where + e.what());
        }
        TrainingRow row;
        try {
            row.record.id = j.at("id").get<std::string>();
            if (j.contains("text"))
                row.record.payload = j["text"].get<std::string>();
            else
                row.record.payload = ScoreVector{j.at("scores").get<std::vector<double>>()};
            row.label = j.at("label").get<int>();
            bool prob = j.contains("posterior");
            if (first) ts.probabilistic = prob;
            if (prob != ts.probabilistic) throw DataError(where + "rows mix hard labels and posteriors");
            if (prob) {
                row.target = j["posterior"].get<std::vector<double>>();
                if (static_cast<int>(row.target.size()) != K)
                    throw DataError(where + "posterior has " + std::to_string(row.target.size()) +
                                    " entries, expected " + std::to_string(K));
                double s = 0.0;
                for (double p : row.target) {
                    if (!(p >= 0.0)) throw DataError(where + "posterior has a negative or NaN entry");
                    s += p;
                }
                if (std::abs(s - 1.0) > 1e-6) throw DataError(where + "posterior does not sum to 1");
            } else {
                row.target.assign(static_cast<std::size_t>(K), 0.0);
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        }
        if (row.label < 0 || row.label >= K) throw DataError(where + "label out of range");
        if (!ts.probabilistic) row.target[static_cast<std::size_t>(row.label)] = 1.0;
        ts.rows.push_back(std::move(row));
        first = false;
    }
    return ts;
}

}  // namespace labelforge::distill
