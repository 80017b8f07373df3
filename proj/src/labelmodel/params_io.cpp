#include <fstream>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/labelmodel/params.hpp"

namespace labelforge::lm {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::MV: return "mv";
        case ModelKind::WMV: return "wmv";
        case ModelKind::DawidSkene: return "ds";
        case ModelKind::Triplet: return "triplet";
        case ModelKind::SnorkelLite: return "snorkel-lite";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "mv") return ModelKind::MV;
    if (s == "wmv") return ModelKind::WMV;
    if (s == "ds" || s == "dawid-skene") return ModelKind::DawidSkene;
    if (s == "triplet") return ModelKind::Triplet;
    if (s == "snorkel-lite") return ModelKind::SnorkelLite;
    throw ValidationError("unknown label model '" + std::string(s) +
                          "' (expected mv, wmv, ds, triplet or snorkel-lite)");
}

void save_params(const LabelModelParams& p, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["kind"] = std::string(to_string(p.kind));
    j["num_classes"] = p.num_classes;
    j["class_names"] = p.class_names;
    j["program_ids"] = p.program_ids;
    j["priors"] = p.priors;
    j["confusion"] = p.confusion;
    j["propensity"] = p.propensity;
    j["accuracies"] = p.accuracies;
    j["weights"] = p.weights;
    if (p.kind == ModelKind::SnorkelLite)
        j["note"] = "one-coin EM surrogate for the Snorkel label model; not Snorkel's matrix-completion objective";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

LabelModelParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label model params " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        LabelModelParams p;
        p.kind = parse_model_kind(j.at("kind").get<std::string>());
        p.num_classes = j.at("num_classes").get<int>();
        p.class_names = j.value("class_names", std::vector<std::string>{});
        p.program_ids = j.at("program_ids").get<std::vector<std::string>>();
        p.priors = j.at("priors").get<std::vector<double>>();
        p.confusion = j.value("confusion", std::vector<Confusion>{});
        p.propensity = j.value("propensity", std::vector<double>{});
        p.accuracies = j.value("accuracies", std::vector<double>{});
        p.weights = j.value("weights", std::vector<double>{});
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace labelforge::lm
