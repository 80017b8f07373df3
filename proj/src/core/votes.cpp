#include <fstream>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/core/votes.hpp"

namespace labelforge {

VoteMatrix::VoteMatrix(std::size_t n, std::size_t m, std::vector<std::string> program_ids,
                       std::vector<std::string> record_ids)
    : n_(n), m_(m), votes_(n * m, kAbstain), program_ids_(std::move(program_ids)), record_ids_(std::move(record_ids)) {
    if (program_ids_.empty()) {
        for (std::size_t j = 0; j < m_; ++j) program_ids_.push_back("p" + std::to_string(j));
    }
    if (program_ids_.size() != m_) throw DimensionError("program_ids size does not match m");
    if (!record_ids_.empty() && record_ids_.size() != n_) throw DimensionError("record_ids size does not match n");
}

VoteMatrix::VoteMatrix(std::vector<std::vector<int>> rows, std::vector<std::string> program_ids)
    : VoteMatrix(rows.size(), rows.empty() ? program_ids.size() : rows.front().size(), std::move(program_ids)) {
    for (std::size_t i = 0; i < n_; ++i) {
        if (rows[i].size() != m_) throw DimensionError("ragged vote rows");
        for (std::size_t j = 0; j < m_; ++j) set(i, j, rows[i][j]);
    }
}

void VoteMatrix::set_record_ids(std::vector<std::string> ids) {
    if (ids.size() != n_) throw DimensionError("record_ids size does not match n");
    record_ids_ = std::move(ids);
}

void VoteMatrix::validate(int num_classes) const {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < m_; ++j) {
            int v = at(i, j);
            if (v != kAbstain && (v < 0 || v >= num_classes))
                throw ValidationError("vote " + std::to_string(v) + " at row " + std::to_string(i) + ", program '" +
                                      program_ids_[j] + "' is outside the class space");
        }
}

VoteMatrix VoteMatrix::select_columns(std::span<const std::size_t> columns) const {
    std::vector<std::string> ids;
    for (auto c : columns) ids.push_back(program_ids_.at(c));
    VoteMatrix out(n_, columns.size(), std::move(ids), record_ids_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = 0; k < columns.size(); ++k) out.set(i, k, at(i, columns[k]));
    return out;
}

void save_votes(const VoteMatrix& votes, const ClassSpace& classes, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["class_names"] = classes.names();
    j["program_ids"] = votes.program_ids();
    j["record_ids"] = votes.record_ids();
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < votes.n(); ++i) {
        auto r = votes.row(i);
        rows.push_back(std::vector<int>(r.begin(), r.end()));
    }
    j["votes"] = std::move(rows);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump() << '\n';
}

VoteMatrix load_votes(const std::filesystem::path& path, ClassSpace* classes_out) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vote matrix " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        ClassSpace classes(j.at("class_names").get<std::vector<std::string>>());
        auto rows = j.at("votes").get<std::vector<std::vector<int>>>();
        auto pids = j.at("program_ids").get<std::vector<std::string>>();
        VoteMatrix vm(rows.size(), pids.size(), pids);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != pids.size())
                throw DimensionError(path.string() + ": row " + std::to_string(i) + " has " +
                                     std::to_string(rows[i].size()) + " votes, expected " + std::to_string(pids.size()));
            for (std::size_t c = 0; c < pids.size(); ++c) vm.set(i, c, rows[i][c]);
        }
        auto rids = j.value("record_ids", std::vector<std::string>{});
        if (!rids.empty()) vm.set_record_ids(std::move(rids));
        vm.validate(classes.size());
        if (classes_out) *classes_out = std::move(classes);
        return vm;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace labelforge
