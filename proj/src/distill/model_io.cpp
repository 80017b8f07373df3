#include <fstream>

#include <json.hpp>

#include "labelforge/core/error.hpp"
#include "labelforge/distill/mlp.hpp"

namespace labelforge::distill {

namespace {

constexpr std::size_t H = Mlp::kHidden;

}  // namespace

// Weights are written output-major ([out][in] row-major) for every layer, so
// W1 is transposed from its in-memory input-major layout.
void save_model(const SavedModel& s, const std::filesystem::path& path) {
    const Mlp& m = s.model;
    const auto& P = m.params();
    const std::size_t d = m.input_dim();
    const std::size_t K = static_cast<std::size_t>(m.num_classes());
    if (!s.class_names.empty() && s.class_names.size() != K)
        throw DimensionError("model has " + std::to_string(K) + " outputs but " +
                             std::to_string(s.class_names.size()) + " class names");

    nlohmann::ordered_json j;
    j["format"] = "labelforge-mlp";
    j["architecture"] = m.layer_sizes();
    j["activation"] = "relu";
    j["output"] = "softmax";
    j["class_names"] = s.class_names;
    j["features"] = s.features.to_json();
    auto layers = nlohmann::ordered_json::array();
    {
        std::vector<double> w(H * d);
        for (std::size_t in = 0; in < d; ++in)
            for (std::size_t out = 0; out < H; ++out) w[out * d + in] = P[m.w1() + in * H + out];
        layers.push_back({{"shape", {H, d}}, {"W", w},
                          {"b", std::vector<double>(P.begin() + static_cast<std::ptrdiff_t>(m.b1()),
                                                    P.begin() + static_cast<std::ptrdiff_t>(m.w2()))}});
    }
    layers.push_back({{"shape", {H, H}},
                      {"W", std::vector<double>(P.begin() + static_cast<std::ptrdiff_t>(m.w2()),
                                                P.begin() + static_cast<std::ptrdiff_t>(m.b2()))},
                      {"b", std::vector<double>(P.begin() + static_cast<std::ptrdiff_t>(m.b2()),
                                                P.begin() + static_cast<std::ptrdiff_t>(m.w3()))}});
    layers.push_back({{"shape", {K, H}},
                      {"W", std::vector<double>(P.begin() + static_cast<std::ptrdiff_t>(m.w3()),
                                                P.begin() + static_cast<std::ptrdiff_t>(m.b3()))},
                      {"b", std::vector<double>(P.begin() + static_cast<std::ptrdiff_t>(m.b3()), P.end())}});
    j["layers"] = layers;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump() << "\n";
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model " + path.string());
    SavedModel s;
    try {
        auto j = nlohmann::json::parse(in);
        auto arch = j.at("architecture").get<std::vector<std::size_t>>();
        if (arch.size() != 4 || arch[1] != H || arch[2] != H)
            throw DataError(path.string() + ": architecture must be [d, 32, 32, K]");
        const std::size_t d = arch[0], K = arch[3];
        s.class_names = j.value("class_names", std::vector<std::string>{});
        s.features = FeatureSpec::from_json(j.at("features"));
        const auto& L = j.at("layers");
        if (L.size() != 3) throw DataError(path.string() + ": expected 3 layers");
        auto W1 = L[0].at("W").get<std::vector<double>>();
        auto b1 = L[0].at("b").get<std::vector<double>>();
        auto W2 = L[1].at("W").get<std::vector<double>>();
        auto b2 = L[1].at("b").get<std::vector<double>>();
        auto W3 = L[2].at("W").get<std::vector<double>>();
        auto b3 = L[2].at("b").get<std::vector<double>>();
        if (W1.size() != H * d || b1.size() != H || W2.size() != H * H || b2.size() != H || W3.size() != K * H ||
            b3.size() != K)
            throw DataError(path.string() + ": layer arrays do not match the architecture");
        std::vector<double> P;
        P.reserve(H * d + H + H * H + H + K * H + K);
        P.resize(H * d);
        for (std::size_t out = 0; out < H; ++out)
            for (std::size_t inp = 0; inp < d; ++inp) P[inp * H + out] = W1[out * d + inp];
        P.insert(P.end(), b1.begin(), b1.end());
        P.insert(P.end(), W2.begin(), W2.end());
        P.insert(P.end(), b2.begin(), b2.end());
        P.insert(P.end(), W3.begin(), W3.end());
        P.insert(P.end(), b3.begin(), b3.end());
        s.model = Mlp::from_params(d, static_cast<int>(K), std::move(P));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return s;
}

void save_metrics_csv(const std::vector<EpochMetrics>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch,train_loss,train_accuracy,validation_accuracy\n";
    for (const auto& m : history) {
        out << m.epoch << ',' << nlohmann::json(m.train_loss).dump() << ',' << nlohmann::json(m.train_accuracy).dump()
            << ',';
        if (m.validation_accuracy) out << nlohmann::json(*m.validation_accuracy).dump();
        out << '\n';
    }
}

}  // namespace labelforge::distill
