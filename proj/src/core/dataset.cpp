#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "labelforge/core/dataset.hpp"
#include "labelforge/core/error.hpp"

namespace labelforge {

namespace {

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

int checked_gold(long long g, const TaskManifest& m, const std::string& at) {
    if (g < 0 || g >= m.classes.size())
        throw DataError(at + "gold label " + std::to_string(g) + " outside 0.." + std::to_string(m.classes.size() - 1));
    return static_cast<int>(g);
}

void check_unique(const std::vector<Record>& records, const std::string& source) {
    std::set<std::string> seen;
    for (const auto& r : records)
        if (!seen.insert(r.id).second) throw DataError(source + ": duplicate record id '" + r.id + "'");
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& at) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted) throw DataError(at + "unterminated quoted field");
    out.push_back(std::move(cur));
    return out;
}

double parse_double(const std::string& s, const std::string& at, const std::string& column) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw DataError(at + "column '" + column + "': not a finite number: '" + s + "'");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::vector<Record> read_jsonl_records(std::istream& in, const TaskManifest& manifest, const std::string& source) {
    std::vector<Record> records;
    std::string line;
    std::size_t lineno = 0;
    const auto& concepts = manifest.concepts.concepts;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        const auto at = where(source, lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(at + "malformed JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
            throw DataError(at + "expected an object with a string 'id'");
        Record r;
        r.id = j["id"].get<std::string>();
        if (manifest.modality == Modality::Text) {
            if (!j.contains("text") || !j["text"].is_string()) throw DataError(at + "missing string field 'text'");
            r.payload = j["text"].get<std::string>();
        } else {
            if (!j.contains("scores") || !j["scores"].is_object())
                throw DataError(at + "missing object field 'scores'");
            const auto& sj = j["scores"];
            ScoreVector sv;
            sv.values.resize(concepts.size());
            for (const auto& [key, value] : sj.items()) {
                auto idx = manifest.concepts.index_of(key);
                if (!idx) throw DataError(at + "score column '" + key + "' is not a declared concept");
                if (!value.is_number() || !std::isfinite(value.get<double>()))
                    throw DataError(at + "score '" + key + "' is not a finite number");
                sv.values[*idx] = value.get<double>();
            }
            for (const auto& c : concepts)
                if (!sj.contains(c)) throw DataError(at + "missing score column '" + c + "'");
            r.payload = std::move(sv);
        }
        if (j.contains("gold") && !j["gold"].is_null()) {
            if (!j["gold"].is_number_integer()) throw DataError(at + "'gold' must be an integer");
            r.gold = checked_gold(j["gold"].get<long long>(), manifest, at);
        }
        if (j.contains("group") && !j["group"].is_null()) {
            if (!j["group"].is_string()) throw DataError(at + "'group' must be a string");
            r.group = j["group"].get<std::string>();
        }
        records.push_back(std::move(r));
    }
    check_unique(records, source);
    return records;
}

std::vector<Record> read_csv_records(std::istream& in, const TaskManifest& manifest, const std::string& source) {
    if (manifest.modality != Modality::Scores) throw DataError(source + ": CSV datasets are scores-modality only");
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ":1: empty CSV (missing header)");
    const auto header = split_csv_line(line, where(source, 1));
    if (header.empty() || header[0] != "id") throw DataError(where(source, 1) + "first column must be 'id'");

    std::optional<std::size_t> gold_col, group_col;
    std::vector<std::pair<std::size_t, std::size_t>> score_cols;  // (csv column, concept index)
    std::set<std::size_t> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto& h = header[c];
        if (h == "gold") {
            gold_col = c;
        } else if (h == "group") {
            group_col = c;
        } else {
            auto idx = manifest.concepts.index_of(h);
            if (!idx) throw DataError(where(source, 1) + "score column '" + h + "' is not a declared concept");
            if (!seen.insert(*idx).second) throw DataError(where(source, 1) + "duplicate score column '" + h + "'");
            score_cols.emplace_back(c, *idx);
        }
    }
    for (std::size_t k = 0; k < manifest.concepts.concepts.size(); ++k)
        if (!seen.count(k))
            throw DataError(where(source, 1) + "missing score column '" + manifest.concepts.concepts[k] + "'");

    std::vector<Record> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        const auto at = where(source, lineno);
        const auto fields = split_csv_line(line, at);
        if (fields.size() != header.size())
            throw DataError(at + "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Record r;
        r.id = fields[0];
        if (r.id.empty()) throw DataError(at + "empty id");
        ScoreVector sv;
        sv.values.resize(manifest.concepts.concepts.size());
        for (auto [col, idx] : score_cols) sv.values[idx] = parse_double(fields[col], at, header[col]);
        r.payload = std::move(sv);
        if (gold_col && !fields[*gold_col].empty()) {
            long long g = 0;
            const auto& s = fields[*gold_col];
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), g);
            if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(at + "column 'gold': not an integer");
            r.gold = checked_gold(g, manifest, at);
        }
        if (group_col && !fields[*group_col].empty()) r.group = fields[*group_col];
        records.push_back(std::move(r));
    }
    check_unique(records, source);
    return records;
}

std::vector<Record> load_dataset(const std::filesystem::path& path, const TaskManifest& manifest) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path.string());
    if (path.extension() == ".csv") return read_csv_records(in, manifest, path.string());
    return read_jsonl_records(in, manifest, path.string());
}

void save_dataset(const std::vector<Record>& records, const std::filesystem::path& path,
                  const TaskManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset " + path.string());
    const auto& concepts = manifest.concepts.concepts;
    if (path.extension() == ".csv") {
        bool any_gold = false, any_group = false;
        for (const auto& r : records) {
            any_gold |= r.gold.has_value();
            any_group |= r.group.has_value();
        }
        out << "id";
        for (const auto& c : concepts) out << ',' << csv_quote(c);
        if (any_gold) out << ",gold";
        if (any_group) out << ",group";
        out << '\n';
        for (const auto& r : records) {
            out << csv_quote(r.id);
            for (double v : r.scores().values) out << ',' << format_double(v);
            if (any_gold) out << ',' << (r.gold ? std::to_string(*r.gold) : "");
            if (any_group) out << ',' << (r.group ? csv_quote(*r.group) : "");
            out << '\n';
        }
        return;
    }
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        if (r.modality() == Modality::Text) {
            j["text"] = r.text();
        } else {
            nlohmann::ordered_json s = nlohmann::ordered_json::object();
            for (std::size_t k = 0; k < concepts.size(); ++k) s[concepts[k]] = r.scores().values[k];
            j["scores"] = std::move(s);
        }
        if (r.gold) j["gold"] = *r.gold;
        if (r.group) j["group"] = *r.group;
        out << j.dump() << '\n';
    }
}

std::vector<std::optional<int>> gold_labels(const std::vector<Record>& records) {
    std::vector<std::optional<int>> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.gold);
    return out;
}

}  // namespace labelforge
