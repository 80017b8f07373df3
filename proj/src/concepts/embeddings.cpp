#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/concepts/concepts.hpp"
#include "labelforge/core/error.hpp"
#include "labelforge/kernels/kernels.hpp"

namespace labelforge::concepts {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "embedding files are little-endian float64");

namespace {

constexpr double kDependentTolerance = 1e-10;

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

std::optional<std::size_t> EmbeddingTable::concept_index(std::string_view name) const {
    for (std::size_t c = 0; c < concept_names.size(); ++c)
        if (concept_names[c] == name) return c;
    return std::nullopt;
}

void EmbeddingTable::validate() const {
    if (d == 0) throw DimensionError("embedding dimension d must be positive");
    if (records.size() != n * d)
        throw DimensionError("record matrix has " + std::to_string(records.size()) + " entries, expected n*d = " +
                             std::to_string(n * d));
    if (concepts.size() != C * d)
        throw DimensionError("concept matrix has " + std::to_string(concepts.size()) + " entries, expected C*d = " +
                             std::to_string(C * d));
    if (concept_names.size() != C)
        throw DimensionError("expected " + std::to_string(C) + " concept names, got " +
                             std::to_string(concept_names.size()));
    if (!record_ids.empty() && record_ids.size() != n)
        throw DimensionError("expected " + std::to_string(n) + " record ids, got " + std::to_string(record_ids.size()));
    if (!gold.empty() && gold.size() != n) throw DimensionError("gold has the wrong length");
    if (!groups.empty() && groups.size() != n) throw DimensionError("group has the wrong length");
    if (!all_finite(records) || !all_finite(concepts)) throw ValidationError("embeddings contain non-finite values");
    for (std::size_t c = 0; c < C; ++c)
        if (kernels::squared_norm(concept_row(c)) == 0.0)
            throw ValidationError("concept '" + concept_names[c] + "' has a zero embedding");
    std::unordered_set<std::string> seen;
    for (const auto& name : concept_names)
        if (!seen.insert(name).second) throw ValidationError("duplicate concept '" + name + "'");
    for (const auto& s : spurious)
        if (!seen.count(s)) throw ValidationError("spurious entry '" + s + "' is not a concept");
}

EmbeddingTable load_embeddings(const fs::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) throw DataError("cannot open embedding sidecar " + sidecar.string());
    EmbeddingTable t;
    fs::path bin;
    try {
        auto j = nlohmann::json::parse(in);
        t.n = j.at("n").get<std::size_t>();
        t.C = j.at("C").get<std::size_t>();
        t.d = j.at("d").get<std::size_t>();
        t.concept_names = j.at("concepts").get<std::vector<std::string>>();
        if (j.contains("record_ids")) t.record_ids = j["record_ids"].get<std::vector<std::string>>();
        if (j.contains("spurious")) t.spurious = j["spurious"].get<std::vector<std::string>>();
        if (j.contains("gold"))
            for (const auto& g : j["gold"]) t.gold.push_back(g.is_null() ? std::nullopt : std::optional<int>(g.get<int>()));
        if (j.contains("group"))
            for (const auto& g : j["group"])
                t.groups.push_back(g.is_null() ? std::nullopt : std::optional<std::string>(g.get<std::string>()));
        bin = j.contains("binary") ? sidecar.parent_path() / j["binary"].get<std::string>()
                                   : fs::path(sidecar).replace_extension(".bin");
    } catch (const nlohmann::json::exception& e) {
        throw DataError(sidecar.string() + ": " + e.what());
    }
    const std::size_t expect = (t.n + t.C) * t.d * sizeof(double);
    std::error_code ec;
    auto size = fs::file_size(bin, ec);
    if (ec) throw DataError("cannot read embedding data " + bin.string());
    if (size != expect)
        throw DimensionError(bin.string() + " holds " + std::to_string(size) + " bytes; sidecar shape needs " +
                             std::to_string(expect));
    std::ifstream data(bin, std::ios::binary);
    t.records.resize(t.n * t.d);
    t.concepts.resize(t.C * t.d);
    data.read(reinterpret_cast<char*>(t.records.data()), static_cast<std::streamsize>(t.records.size() * sizeof(double)));
    data.read(reinterpret_cast<char*>(t.concepts.data()),
              static_cast<std::streamsize>(t.concepts.size() * sizeof(double)));
    if (!data) throw DataError("short read from " + bin.string());
    if (t.record_ids.empty())
        for (std::size_t i = 0; i < t.n; ++i) t.record_ids.push_back("r" + std::to_string(i));
    t.validate();
    return t;
}

void save_embeddings(const EmbeddingTable& t, const fs::path& stem) {
    t.validate();
    fs::path bin = fs::path(stem).concat(".bin");
    fs::path side = fs::path(stem).concat(".json");
    {
        std::ofstream out(bin, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + bin.string());
        out.write(reinterpret_cast<const char*>(t.records.data()), static_cast<std::streamsize>(t.records.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(t.concepts.data()),
                  static_cast<std::streamsize>(t.concepts.size() * sizeof(double)));
    }
    nlohmann::ordered_json j;
    j["n"] = t.n;
    j["C"] = t.C;
    j["d"] = t.d;
    j["binary"] = bin.filename().string();
    j["layout"] = "float64 little-endian, row-major; n record rows then C concept rows";
    j["concepts"] = t.concept_names;
    j["record_ids"] = t.record_ids;
    if (!t.spurious.empty()) j["spurious"] = t.spurious;
    if (!t.gold.empty()) {
        auto& g = j["gold"] = nlohmann::ordered_json::array();
        for (const auto& v : t.gold) g.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
    }
    if (!t.groups.empty()) {
        auto& g = j["group"] = nlohmann::ordered_json::array();
        for (const auto& v : t.groups) g.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
    }
    std::ofstream out(side, std::ios::trunc);
    if (!out) throw DataError("cannot write " + side.string());
    out << j.dump(2) << "\n";
}

std::vector<double> scores_from_embeddings(const EmbeddingTable& t, std::span<const std::size_t> columns) {
    t.validate();
    for (auto c : columns)
        if (c >= t.C) throw DimensionError("concept column " + std::to_string(c) + " out of range");
    std::vector<double> concept_norm(t.C);
    for (std::size_t c = 0; c < t.C; ++c) concept_norm[c] = std::sqrt(kernels::squared_norm(t.concept_row(c)));
    const std::size_t width = columns.size();
    std::vector<double> out(t.n * width, 0.5);
    std::size_t zero_rows = 0;
    for (std::size_t i = 0; i < t.n; ++i) {
        const double rn = std::sqrt(kernels::squared_norm(t.record(i)));
        if (rn == 0.0) {
            ++zero_rows;
            continue;
        }
        for (std::size_t k = 0; k < width; ++k) {
            const std::size_t c = columns[k];
            double cos = kernels::dot(t.record(i), t.concept_row(c)) / (rn * concept_norm[c]);
            cos = std::clamp(cos, -1.0, 1.0);
            out[i * width + k] = (cos + 1.0) / 2.0;
        }
    }
    if (zero_rows) spdlog::warn("{} record(s) have zero-norm embeddings; their scores are 0.5", zero_rows);
    return out;
}

std::vector<double> scores_from_embeddings(const EmbeddingTable& t) {
    std::vector<std::size_t> all(t.C);
    for (std::size_t c = 0; c < t.C; ++c) all[c] = c;
    return scores_from_embeddings(t, all);
}

std::vector<std::vector<double>> orthonormalize(const std::vector<std::vector<double>>& directions) {
    std::vector<std::vector<double>> basis;
    for (std::size_t k = 0; k < directions.size(); ++k) {
        std::vector<double> v = directions[k];
        if (!basis.empty() && v.size() != basis.front().size())
            throw DimensionError("spurious directions have different dimensions");
        const double original = std::sqrt(kernels::squared_norm(v));
        if (original == 0.0) throw ValidationError("spurious direction " + std::to_string(k) + " is the zero vector");
        for (const auto& u : basis) kernels::axpy(-kernels::dot(v, u), u, v);
        const double rest = std::sqrt(kernels::squared_norm(v));
        if (rest <= kDependentTolerance * original) {
            spdlog::warn("spurious direction {} is dependent on earlier ones; dropped", k);
            continue;
        }
        for (double& x : v) x /= rest;
        basis.push_back(std::move(v));
    }
    return basis;
}

void subtract_directions(std::span<double> v, const std::vector<std::vector<double>>& unit_directions) {
    for (const auto& u : unit_directions) {
        if (u.size() != v.size()) throw DimensionError("direction and vector dimensions differ");
        kernels::axpy(-kernels::dot(v, u), u, v);
    }
}

EmbeddingTable reject_spurious(const EmbeddingTable& table, std::span<const std::size_t> spurious_rows) {
    table.validate();
    std::vector<std::vector<double>> dirs;
    for (auto c : spurious_rows) {
        if (c >= table.C) throw DimensionError("spurious concept row " + std::to_string(c) + " out of range");
        auto row = table.concept_row(c);
        dirs.emplace_back(row.begin(), row.end());
    }
    auto basis = orthonormalize(dirs);
    EmbeddingTable out = table;
    for (std::size_t i = 0; i < out.n; ++i) subtract_directions(out.record(i), basis);
    return out;
}

EmbeddingTable reject_spurious(const EmbeddingTable& table) {
    std::vector<std::size_t> rows;
    for (const auto& s : table.spurious) {
        auto c = table.concept_index(s);
        if (!c) throw ValidationError("spurious entry '" + s + "' is not a concept");
        rows.push_back(*c);
    }
    return reject_spurious(table, rows);
}

std::vector<Record> score_records(const EmbeddingTable& table, ConceptSet* out_set, const std::string& task) {
    std::unordered_set<std::string> spurious(table.spurious.begin(), table.spurious.end());
    std::vector<std::size_t> cols;
    ConceptSet cs;
    cs.task = task;
    for (std::size_t c = 0; c < table.C; ++c) {
        if (spurious.count(table.concept_names[c])) continue;
        cols.push_back(c);
        cs.concepts.push_back(table.concept_names[c]);
    }
    if (cols.empty()) throw ValidationError("every concept is flagged spurious; nothing to score");
    auto scores = scores_from_embeddings(table, cols);
    std::vector<Record> out(table.n);
    for (std::size_t i = 0; i < table.n; ++i) {
        out[i].id = table.record_ids.empty() ? "r" + std::to_string(i) : table.record_ids[i];
        out[i].payload = ScoreVector{std::vector<double>(scores.begin() + static_cast<std::ptrdiff_t>(i * cols.size()),
                                                         scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols.size()))};
        if (!table.gold.empty()) out[i].gold = table.gold[i];
        if (!table.groups.empty()) out[i].group = table.groups[i];
    }
    if (out_set) *out_set = std::move(cs);
    return out;
}

}  // namespace labelforge::concepts
