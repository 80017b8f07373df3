#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "labelforge/cli/cli.hpp"
#include "labelforge/cli/run_dir.hpp"
#include "labelforge/concepts/concepts.hpp"
#include "labelforge/core/dataset.hpp"
#include "labelforge/core/error.hpp"
#include "labelforge/core/pseudolabels.hpp"
#include "labelforge/core/task_manifest.hpp"
#include "labelforge/core/votes.hpp"
#include "labelforge/diagnostics/diagnostics.hpp"
#include "labelforge/distill/export.hpp"
#include "labelforge/distill/features.hpp"
#include "labelforge/distill/mlp.hpp"
#include "labelforge/dsl/evaluate.hpp"
#include "labelforge/dsl/parser.hpp"
#include "labelforge/dsl/program_io.hpp"
#include "labelforge/labelmodel/label_models.hpp"
#include "labelforge/labelmodel/params.hpp"
#include "labelforge/prompt/generate.hpp"

#ifndef LABELFORGE_DATA_DIR
#define LABELFORGE_DATA_DIR "data"
#endif

namespace labelforge::cli {

using namespace labelforge::lm;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Global {
    std::string runs_dir = "runs";
    std::string run_id = "default";
    bool force = false;
    std::uint64_t seed = 0;
    bool verbose = false;
    bool quiet = false;
};

fs::path data_dir() {
    if (const char* env = std::getenv("LABELFORGE_DATA_DIR"); env && *env) return env;
    return LABELFORGE_DATA_DIR;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError(path.string() + " is not valid JSON");
    return j;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

// -------------------------------------------------------------- LLM settings

struct LlmConfig {
    prompt::ChatSettings chat;
    prompt::Pricing pricing;
    int concurrency = 2;
    std::string api_key_env = "OPENAI_API_KEY";
};

LlmConfig load_llm_config(const std::string& path) {
    LlmConfig c;
    // gpt-3.5-turbo list prices; override with "pricing" in the config.
    c.pricing.input_rate = 0.0005;
    c.pricing.output_rate = 0.0015;
    if (path.empty()) return c;
    auto j = read_json_file(path);
    try {
        c.chat.endpoint = j.value("endpoint", c.chat.endpoint);
        c.chat.model = j.value("model", c.chat.model);
        c.chat.temperature = j.value("temperature", c.chat.temperature);
        c.concurrency = j.value("concurrency", c.concurrency);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        if (j.contains("retry")) {
            const auto& r = j["retry"];
            c.chat.retry.max_attempts = r.value("max_attempts", c.chat.retry.max_attempts);
            c.chat.retry.initial_backoff =
                std::chrono::milliseconds(r.value("initial_backoff_ms", c.chat.retry.initial_backoff.count()));
            c.chat.retry.multiplier = r.value("multiplier", c.chat.retry.multiplier);
        }
        if (j.contains("pricing")) c.pricing = prompt::Pricing::from_json(nlohmann::json::parse(j["pricing"].dump()));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return c;
}

json config_snapshot(const LlmConfig& c, const std::string& mock) {
    json j;
    j["endpoint"] = c.chat.endpoint;
    j["model"] = c.chat.model;
    j["temperature"] = c.chat.temperature;
    j["concurrency"] = c.concurrency;
    j["retry"] = {{"max_attempts", c.chat.retry.max_attempts},
                  {"initial_backoff_ms", c.chat.retry.initial_backoff.count()},
                  {"multiplier", c.chat.retry.multiplier}};
    j["pricing"] = {{"input", c.pricing.input_rate ? json(*c.pricing.input_rate) : json()},
                    {"output", c.pricing.output_rate ? json(*c.pricing.output_rate) : json()},
                    {"unit_tokens", c.pricing.unit_tokens}};
    j["api_key_env"] = c.api_key_env;
    j["mock"] = mock.empty() ? json() : json(mock);
    return j;
}

std::unique_ptr<prompt::Transport> make_transport(LlmConfig& c, const std::string& mock) {
    if (!mock.empty()) return std::make_unique<prompt::MockTransport>(prompt::MockTransport::from_file(mock));
    const char* key = std::getenv(c.api_key_env.c_str());
    if (!key || !*key)
        throw ValidationError("no API key: set the " + c.api_key_env +
                              " environment variable, or pass --mock <fixture> to run offline");
    c.chat.api_key = key;
    return std::make_unique<prompt::HttpTransport>();
}

prompt::TaskPack find_pack(const std::string& name, const std::string& tasks_dir) {
    return prompt::TaskPack::find(name, tasks_dir.empty() ? data_dir() / "tasks" : fs::path(tasks_dir));
}

// kind:path, e.g. keywords:kw.txt
prompt::SupplementBlock read_supplement(const std::string& spec, std::size_t n_exemplars) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw ValidationError("--supplement expects kind:path, got '" + spec + "'");
    auto kind = prompt::parse_supplement_kind(spec.substr(0, colon));
    fs::path file = spec.substr(colon + 1);
    std::string text = read_text(file);
    if (kind == prompt::SupplementKind::Keywords) {
        std::vector<std::string> kws;
        std::string cur;
        for (char c : text + "\n") {
            if (c == ',' || c == '\n' || c == '\r') {
                auto a = cur.find_first_not_of(" \t");
                auto b = cur.find_last_not_of(" \t");
                if (a != std::string::npos) kws.push_back(cur.substr(a, b - a + 1));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (kws.empty()) throw ValidationError(file.string() + ": no keywords");
        return prompt::keywords_block(kws);
    }
    if (kind == prompt::SupplementKind::DataExemplars) {
        std::vector<prompt::Exemplar> ex;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line) && ex.size() < n_exemplars) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("text") || !j.contains("class"))
                throw DataError(file.string() + ":" + std::to_string(lineno) + ": expected {\"text\", \"class\"}");
            ex.push_back({j["text"].get<std::string>(), j["class"].get<std::string>()});
        }
        return prompt::exemplars_block(std::move(ex));
    }
    prompt::SupplementBlock b;
    b.kind = kind;
    b.body = text;
    return b;
}

// -------------------------------------------------------------- commands

struct GenerateOpts {
    std::string task, tasks_dir, mock, config, model, endpoint, concepts;
    int n = 10;
    std::optional<double> temperature;
    std::optional<int> concurrency;
    std::vector<std::string> supplements;
    std::size_t n_exemplars = 5;
};

int cmd_generate(const GenerateOpts& o, const Global& g) {
    auto pack = find_pack(o.task, o.tasks_dir);
    auto cfg = load_llm_config(o.config);
    if (!o.model.empty()) cfg.chat.model = o.model;
    if (!o.endpoint.empty()) cfg.chat.endpoint = o.endpoint;
    if (o.temperature) cfg.chat.temperature = *o.temperature;
    if (o.concurrency) cfg.concurrency = *o.concurrency;

    std::optional<ConceptSet> concepts;
    if (!o.concepts.empty()) concepts = concepts::load_concept_set(o.concepts);
    if (pack.modality == Modality::Scores && !concepts)
        throw ValidationError("task '" + pack.name + "' uses concept scores; pass --concepts <concepts.json>");

    std::vector<prompt::SupplementBlock> supplements;
    for (const auto& s : o.supplements) supplements.push_back(read_supplement(s, o.n_exemplars));

    prompt::GenerationJob job;
    job.prompt = pack.prompt_spec(std::move(supplements), concepts ? &*concepts : nullptr);
    job.n_programs = o.n;
    job.concurrency = cfg.concurrency;
    job.chat = cfg.chat;
    job.validate();
    auto transport = make_transport(cfg, o.mock);
    job.chat.api_key = cfg.chat.api_key;

    RunDir rd(g.runs_dir, g.run_id, g.force);
    const std::vector<std::string> outputs = {"raw", "programs", "prompt.txt", "generation.json", "cost.json"};
    rd.claim(outputs);
    fs::remove_all(rd.file("raw"));
    fs::remove_all(rd.file("programs"));

    auto res = prompt::generate_programs(job, *transport, pack.class_space(), concepts ? &*concepts : nullptr,
                                         rd.path(), cfg.pricing);
    for (const auto& s : res.slots) {
        if (g.quiet) break;
        if (s.program_path)
            std::cout << "slot " << prompt::slot_name(s.slot) << ": accepted -> "
                      << fs::relative(*s.program_path, rd.path()).generic_string() << "\n";
        else
            std::cout << "slot " << prompt::slot_name(s.slot) << ": rejected (" << s.extraction.rejection << ")\n";
    }
    std::cout << res.programs() << " of " << o.n << " programs accepted; estimated cost $" << fmt_double(res.cost.dollars)
              << " (" << res.cost.input_tokens << " input + " << res.cost.output_tokens << " output tokens)\n";
    if (res.programs() == 0) spdlog::warn("no program was accepted; see {}/generation.json", rd.path().string());

    json args = {{"task", o.task}, {"n", o.n}, {"supplements", o.supplements}};
    json fields = {{"task_pack", pack.name}, {"programs_dir", "programs"}, {"config", config_snapshot(cfg, o.mock)}};
    rd.record_step("generate", args, outputs, fields);
    return kExitOk;
}

struct ElicitOpts {
    std::string task, tasks_dir, mock, config, model;
};

int cmd_elicit(const ElicitOpts& o, const Global& g) {
    auto pack = find_pack(o.task, o.tasks_dir);
    if (!pack.concept_prompt) throw ValidationError("task pack '" + pack.name + "' has no concept prompt");
    auto cfg = load_llm_config(o.config);
    if (!o.model.empty()) cfg.chat.model = o.model;
    auto transport = make_transport(cfg, o.mock);
    RunDir rd(g.runs_dir, g.run_id, g.force);
    const std::vector<std::string> outputs = {"raw/concepts.json", "concepts.json"};
    rd.claim(outputs);
    fs::remove(rd.file("concepts.json"));
    auto r = concepts::elicit_concepts(*transport, cfg.chat, *pack.concept_prompt, pack.name, rd.path());
    if (!r.concepts)
        throw DataError("concept response rejected: " + r.rejection + " (raw response kept in " +
                        rd.file("raw/concepts.json").string() + ")");
    for (const auto& c : r.concepts->concepts) std::cout << c << "\n";
    std::cout << r.concepts->concepts.size() << " concepts";
    if (r.duplicates_dropped) std::cout << " (" << r.duplicates_dropped << " duplicates dropped)";
    std::cout << "\n";
    rd.record_step("elicit", {{"task", o.task}}, outputs, {{"config", config_snapshot(cfg, o.mock)}});
    return kExitOk;
}

struct ScoresOpts {
    std::string embeddings, task, tasks_dir, classes, name;
    bool reject = false;
};

int cmd_scores(const ScoresOpts& o, const Global& g) {
    auto table = concepts::load_embeddings(o.embeddings);
    std::vector<std::string> classes;
    std::string name = o.name;
    if (!o.task.empty()) {
        auto pack = find_pack(o.task, o.tasks_dir);
        classes = pack.classes;
        if (name.empty()) name = pack.name;
    }
    if (!o.classes.empty()) {
        classes.clear();
        std::stringstream ss(o.classes);
        for (std::string c; std::getline(ss, c, ',');) classes.push_back(c);
    }
    if (classes.empty()) throw ValidationError("pass --task <pack> or --classes a,b to name the classes");
    if (name.empty()) name = fs::path(o.embeddings).stem().string();
    if (o.reject) {
        if (table.spurious.empty()) throw ValidationError("--reject-spurious needs a 'spurious' list in the sidecar");
        table = concepts::reject_spurious(table);
    }
    ConceptSet cs;
    auto records = concepts::score_records(table, &cs, name);

    RunDir rd(g.runs_dir, g.run_id, g.force);
    const std::vector<std::string> outputs = {"scores.csv", "concepts.json", "task.json"};
    rd.claim(outputs);
    TaskManifest m;
    m.name = name;
    m.classes = ClassSpace(classes);
    m.modality = Modality::Scores;
    m.concepts = cs;
    m.dataset = rd.file("scores.csv");
    save_dataset(records, rd.file("scores.csv"), m);
    concepts::save_concept_set(cs, rd.file("concepts.json"));
    json tj;
    tj["name"] = name;
    tj["classes"] = classes;
    tj["modality"] = "scores";
    tj["dataset"] = "scores.csv";
    tj["concepts"] = "concepts.json";
    write_text(rd.file("task.json"), tj.dump(2) + "\n");
    std::cout << "scored " << records.size() << " records on " << cs.concepts.size() << " concepts"
              << (o.reject ? " after removing " + std::to_string(table.spurious.size()) + " spurious direction(s)" : "")
              << "\n";
    rd.record_step("scores", {{"embeddings", o.embeddings}, {"reject_spurious", o.reject}}, outputs,
                   {{"task_manifest", "task.json"}});
    return kExitOk;
}

struct ApplyOpts {
    std::string task, programs, dataset;
    int threads = 0;
    int budget_ms = 50;
};

int cmd_apply(const ApplyOpts& o, const Global& g) {
    auto manifest = TaskManifest::load(o.task);
    RunDir rd(g.runs_dir, g.run_id, g.force);
    fs::path programs_dir = o.programs.empty() ? rd.existing("programs", "generate") : fs::path(o.programs);
    auto programs = dsl::load_programs(programs_dir, manifest.classes,
                                       manifest.concepts.empty() ? nullptr : &manifest.concepts);
    if (programs.empty()) throw DataError("no .lf programs in " + programs_dir.string());
    auto records = load_dataset(o.dataset.empty() ? manifest.dataset : fs::path(o.dataset), manifest);
    dsl::AssembleOptions opts;
    opts.threads = o.threads > 0 ? static_cast<std::size_t>(o.threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
    opts.eval.budget = std::chrono::milliseconds(o.budget_ms);
    auto votes = dsl::assemble_votes(records, programs, opts);
    const std::vector<std::string> outputs = {"votes.json"};
    rd.claim(outputs);
    save_votes(votes, manifest.classes, rd.file("votes.json"));
    std::cout << "applied " << votes.m() << " programs to " << votes.n() << " records; label coverage "
              << fmt_double(diag::label_coverage(votes)) << "\n";
    rd.record_step("apply", {{"task", o.task}, {"programs", programs_dir.string()}}, outputs,
                   {{"task_manifest", fs::absolute(o.task).lexically_normal().string()},
                    {"programs_dir", fs::absolute(programs_dir).lexically_normal().string()}});
    return kExitOk;
}

std::vector<std::optional<int>> gold_for(const VoteMatrix& votes, const std::string& task, std::size_t* with_gold) {
    auto manifest = TaskManifest::load(task);
    auto records = load_dataset(manifest.dataset, manifest);
    if (records.size() != votes.n())
        throw DimensionError("task dataset has " + std::to_string(records.size()) + " records, votes have " +
                             std::to_string(votes.n()));
    std::vector<std::optional<int>> gold;
    std::size_t count = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!votes.record_ids().empty() && votes.record_ids()[i] != records[i].id)
            throw ValidationError("vote row " + std::to_string(i + 1) + " is record '" + votes.record_ids()[i] +
                                  "' but the dataset has '" + records[i].id + "'");
        gold.push_back(records[i].gold);
        count += records[i].gold.has_value();
    }
    if (with_gold) *with_gold = count;
    return gold;
}

struct AnalyzeOpts {
    std::string votes, task;
    double threshold = diag::kDefaultCoverageThreshold;
};

int cmd_analyze(const AnalyzeOpts& o, const Global& g) {
    RunDir rd(g.runs_dir, g.run_id, g.force);
    fs::path vpath = o.votes.empty() ? rd.existing("votes.json", "apply") : fs::path(o.votes);
    ClassSpace classes;
    auto votes = load_votes(vpath, &classes);
    std::optional<std::vector<std::optional<int>>> gold;
    if (!o.task.empty()) gold = gold_for(votes, o.task, nullptr);
    auto stats = diag::analyze(votes, gold ? &*gold : nullptr, o.threshold);
    const std::vector<std::string> outputs = {"analysis.json", "analysis.txt"};
    rd.claim(outputs);
    auto j = diag::analysis_to_json(stats, votes, o.threshold);
    write_text(rd.file("analysis.json"), j.dump(2) + "\n");
    auto table = diag::analysis_table(stats, classes);
    write_text(rd.file("analysis.txt"), table);
    if (!g.quiet) std::cout << table;
    bool flagged = false;
    for (const auto& s : stats)
        if (s.flagged_low_coverage) {
            flagged = true;
            std::cout << "flagged: " << s.program_id << " covers " << fmt_double(s.coverage)
                      << " of records (below " << fmt_double(o.threshold) << ")\n";
        }
    rd.record_step("analyze", {{"votes", vpath.string()}, {"threshold", o.threshold}}, outputs);
    return flagged ? kExitFlagged : kExitOk;
}

struct AggregateOpts {
    std::string votes, model = "ds", params, task;
    bool keep_flagged = false;
    double threshold = diag::kDefaultCoverageThreshold;
    int max_iter = 200;
    double tol = 1e-6;
    double smoothing = 0.01;
};

int cmd_aggregate(const AggregateOpts& o, const Global& g) {
    RunDir rd(g.runs_dir, g.run_id, g.force);
    fs::path vpath = o.votes.empty() ? rd.existing("votes.json", "apply") : fs::path(o.votes);
    ClassSpace classes;
    auto votes = load_votes(vpath, &classes);
    const int K = classes.size();
    std::optional<std::vector<std::optional<int>>> gold;
    std::size_t n_gold = 0;
    if (!o.task.empty()) gold = gold_for(votes, o.task, &n_gold);

    json report;
    LabelModelParams params;
    std::vector<std::string> dropped;
    if (!o.params.empty()) {
        params = load_params(o.params);
        if (params.m() != votes.m())
            throw DimensionError("params were fitted on " + std::to_string(params.m()) + " programs but the votes have " +
                                 std::to_string(votes.m()));
        if (params.num_classes != K)
            throw DimensionError("params have " + std::to_string(params.num_classes) + " classes, votes have " +
                                 std::to_string(K));
        if (params.program_ids != votes.program_ids())
            throw ValidationError("params and votes name different programs");
        report["reused_params"] = o.params;
    } else {
        auto kind = parse_model_kind(o.model);
        if (!o.keep_flagged) {
            auto stats = diag::analyze(votes, nullptr, o.threshold);
            std::vector<std::size_t> keep;
            for (std::size_t j = 0; j < stats.size(); ++j) {
                if (stats[j].flagged_low_coverage)
                    dropped.push_back(stats[j].program_id);
                else
                    keep.push_back(j);
            }
            if (keep.empty()) throw ValidationError("every program is below the coverage threshold; nothing to aggregate");
            for (const auto& d : dropped) spdlog::warn("dropping low-coverage program {}", d);
            if (!dropped.empty()) votes = votes.select_columns(keep);
        }
        EmConfig em{o.max_iter, o.tol, o.smoothing};
        FitReport fr;
        switch (kind) {
            case ModelKind::MV: params = majority_params(votes, K); break;
            case ModelKind::WMV: params = fit_weighted_majority(votes, K, gold ? &*gold : nullptr); break;
            case ModelKind::DawidSkene: {
                auto r = fit_dawid_skene(votes, K, em);
                params = r.params;
                fr = r.report;
                break;
            }
            case ModelKind::SnorkelLite: {
                auto r = fit_snorkel_lite(votes, K, em);
                params = r.params;
                fr = r.report;
                break;
            }
            case ModelKind::Triplet: {
                auto r = fit_triplet(votes, K);
                params = r.params;
                fr = r.report;
                break;
            }
        }
        params.class_names = classes.names();
        report["iterations"] = fr.iterations;
        report["converged"] = fr.converged;
        report["final_log_likelihood"] = fr.final_log_likelihood;
        report["log_likelihood_trace"] = fr.log_likelihood_trace;
        report["objective_trace"] = fr.objective_trace;
        report["program_accuracy"] = fr.program_accuracy;
        report["alignment"] = fr.alignment;
        if (!fr.triplets_used.empty()) report["triplets_used"] = fr.triplets_used;
    }
    auto pls = predict(params, votes);
    report["model"] = std::string(to_string(params.kind));
    report["programs"] = params.program_ids;
    report["dropped_low_coverage"] = dropped;
    report["label_model_coverage"] = diag::coverage_of_label_model(pls);
    if (gold && n_gold) {
        std::size_t hit = 0, hit_cov = 0, cov = 0;
        for (std::size_t i = 0; i < pls.size(); ++i) {
            if (!(*gold)[i]) continue;
            bool ok = pls[i].hard == *(*gold)[i];
            hit += ok;
            if (pls[i].covered) {
                ++cov;
                hit_cov += ok;
            }
        }
        report["accuracy"] = static_cast<double>(hit) / static_cast<double>(n_gold);
        report["accuracy_covered"] = cov ? json(static_cast<double>(hit_cov) / static_cast<double>(cov)) : json();
    }

    const std::vector<std::string> outputs = {"params.json", "pseudolabels.jsonl", "fit_report.json"};
    rd.claim(outputs);
    save_params(params, rd.file("params.json"));
    save_pseudolabels(pls, classes, rd.file("pseudolabels.jsonl"));
    write_text(rd.file("fit_report.json"), report.dump(2) + "\n");
    std::cout << "label model " << to_string(params.kind) << " over " << params.m() << " programs; coverage "
              << fmt_double(report["label_model_coverage"].get<double>());
    if (report.contains("accuracy")) std::cout << "; accuracy " << fmt_double(report["accuracy"].get<double>());
    std::cout << "\n";
    json args = {{"votes", vpath.string()}, {"model", o.params.empty() ? o.model : "reuse"},
                 {"keep_flagged", o.keep_flagged}};
    rd.record_step("aggregate", args, outputs, {{"label_model", std::string(to_string(params.kind))}});
    return kExitOk;
}

struct ExportOpts {
    std::string task, pseudolabels;
    bool probabilistic = false;
    bool keep_uncovered = false;
};

int cmd_export(const ExportOpts& o, const Global& g) {
    auto manifest = TaskManifest::load(o.task);
    RunDir rd(g.runs_dir, g.run_id, g.force);
    fs::path ppath = o.pseudolabels.empty() ? rd.existing("pseudolabels.jsonl", "aggregate") : fs::path(o.pseudolabels);
    auto records = load_dataset(manifest.dataset, manifest);
    auto pls = load_pseudolabels(ppath, manifest.classes.size());
    const std::vector<std::string> outputs = {"train.jsonl"};
    rd.claim(outputs);
    distill::ExportOptions eo{o.probabilistic, !o.keep_uncovered};
    auto rep = distill::export_training_set(records, pls, manifest.classes, eo, rd.file("train.jsonl"));
    std::cout << "exported " << rep.exported << " rows; dropped " << rep.dropped_uncovered << " uncovered\n";
    rd.record_step("export", {{"task", o.task}, {"probabilistic", o.probabilistic}, {"keep_uncovered", o.keep_uncovered}},
                   outputs, {{"export", {{"exported", rep.exported}, {"dropped_uncovered", rep.dropped_uncovered}}}});
    return kExitOk;
}

struct TrainOpts {
    std::string task, train;
    int epochs = 100;
    double lr = 1e-3;
    std::size_t batch = 32;
    double validation_fraction = 0.2;
    std::size_t dims = 4096;
};

int cmd_train(const TrainOpts& o, const Global& g) {
    auto manifest = TaskManifest::load(o.task);
    RunDir rd(g.runs_dir, g.run_id, g.force);
    fs::path tpath = o.train.empty() ? rd.existing("train.jsonl", "export") : fs::path(o.train);
    const int K = manifest.classes.size();
    auto ts = distill::load_training_set(tpath, K);
    if (ts.rows.empty()) throw DataError(tpath.string() + " has no rows");
    auto spec = distill::FeatureSpec::for_modality(manifest.modality, manifest.concepts.concepts.size());
    if (spec.mode == distill::FeatureMode::HashedBagOfWords) spec.dims = o.dims;
    spec.validate(K);
    if (!(o.validation_fraction >= 0.0 && o.validation_fraction < 1.0))
        throw ValidationError("--validation-fraction must be within [0, 1)");

    std::vector<std::size_t> order(ts.rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(g.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(static_cast<double>(order.size()) * o.validation_fraction);
    std::vector<distill::SparseRow> tx, vx;
    std::vector<std::vector<double>> tt;
    std::vector<int> vy;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& row = ts.rows[order[k]];
        auto x = distill::featurize(row.record, spec);
        if (k < n_val) {
            vx.push_back(std::move(x));
            vy.push_back(row.label);
        } else {
            tx.push_back(std::move(x));
            tt.push_back(row.target);
        }
    }
    distill::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.learning_rate = o.lr;
    tc.batch_size = o.batch;
    tc.seed = g.seed;
    auto res = distill::train_mlp(tx, tt, vx, vy, spec.dims, K, tc);

    const std::vector<std::string> outputs = {"model.json", "metrics.csv"};
    rd.claim(outputs);
    distill::save_model({res.model, spec, manifest.classes.names()}, rd.file("model.json"));
    distill::save_metrics_csv(res.history, rd.file("metrics.csv"));
    const auto& last = res.history.back();
    std::cout << "trained on " << tx.size() << " rows (" << vx.size() << " held out); initial loss "
              << fmt_double(res.initial_loss) << ", final loss " << fmt_double(last.train_loss) << ", train accuracy "
              << fmt_double(last.train_accuracy);
    if (last.validation_accuracy) std::cout << ", validation accuracy " << fmt_double(*last.validation_accuracy);
    std::cout << "\n";
    json args = {{"train", tpath.string()}, {"epochs", o.epochs}, {"lr", o.lr}, {"batch", o.batch},
                 {"seed", g.seed}, {"validation_fraction", o.validation_fraction}};
    rd.record_step("train", args, outputs, {{"features", spec.to_json()}});
    return kExitOk;
}

struct EvalOpts {
    std::string task, model, pseudolabels, dataset;
};

int cmd_eval(const EvalOpts& o, const Global& g) {
    if (o.model.empty() == o.pseudolabels.empty()) throw ValidationError("pass exactly one of --model or --pseudolabels");
    auto manifest = TaskManifest::load(o.task);
    fs::path dpath = !o.dataset.empty() ? fs::path(o.dataset)
                     : (o.pseudolabels.empty() && manifest.validation) ? *manifest.validation
                                                                       : manifest.dataset;
    auto records = load_dataset(dpath, manifest);
    std::vector<int> preds(records.size());
    if (!o.model.empty()) {
        auto saved = distill::load_model(o.model);
        if (saved.model.num_classes() != manifest.classes.size())
            throw DimensionError("model predicts " + std::to_string(saved.model.num_classes()) + " classes, task has " +
                                 std::to_string(manifest.classes.size()));
        for (std::size_t i = 0; i < records.size(); ++i)
            preds[i] = saved.model.predict(distill::featurize(records[i], saved.features));
    } else {
        auto pls = load_pseudolabels(o.pseudolabels, manifest.classes.size());
        std::map<std::string, int> by_id;
        for (const auto& p : pls) by_id[p.record_id] = p.hard;
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto it = by_id.find(records[i].id);
            if (it == by_id.end()) throw ValidationError("no pseudolabel for record '" + records[i].id + "'");
            preds[i] = it->second;
        }
    }
    std::vector<int> p, y;
    std::vector<std::string> groups;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].gold) {
            ++skipped;
            continue;
        }
        p.push_back(preds[i]);
        y.push_back(*records[i].gold);
        groups.push_back(records[i].group.value_or("all"));
    }
    if (y.empty()) throw DataError(dpath.string() + " has no gold labels to evaluate against");
    if (skipped) spdlog::warn("{} record(s) without gold were skipped", skipped);
    auto rep = diag::group_metrics(p, y, groups);
    RunDir rd(g.runs_dir, g.run_id, g.force);
    const std::vector<std::string> outputs = {"eval.json"};
    rd.claim(outputs);
    auto j = diag::group_report_to_json(rep);
    j["evaluated"] = y.size();
    j["source"] = o.model.empty() ? "pseudolabels" : "model";
    write_text(rd.file("eval.json"), j.dump(2) + "\n");
    std::cout << "average accuracy " << fmt_double(rep.average_accuracy) << ", worst group " << rep.worst_group << " "
              << fmt_double(rep.worst_group_accuracy) << ", gap " << fmt_double(rep.gap) << "\n";
    rd.record_step("eval", {{"task", o.task}, {"model", o.model}, {"pseudolabels", o.pseudolabels},
                            {"dataset", dpath.string()}},
                   outputs);
    return kExitOk;
}

struct CheckOpts {
    std::string task;
    std::vector<std::string> files;
    bool print = false;
};

int cmd_check(const CheckOpts& o, const Global&) {
    auto manifest = TaskManifest::load(o.task);
    int bad = 0;
    for (const auto& f : o.files) {
        try {
            auto prog = dsl::load_program(f, manifest.classes, manifest.concepts.empty() ? nullptr : &manifest.concepts);
            std::cout << f << ": ok (" << prog.rules.size() << " rules)\n";
            if (o.print) std::cout << dsl::pretty_print(prog, manifest.classes);
        } catch (const Error& e) {
            ++bad;
            std::cout << e.what() << "\n";
        }
    }
    return bad ? kExitError : kExitOk;
}

void setup_logging(const Global& g) {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = spdlog::stderr_color_mt("labelforge");
        l->set_pattern("%^%l%$: %v");
        return l;
    }();
    spdlog::set_default_logger(logger);
    spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::err : spdlog::level::info);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Programmatic labeling: generate, apply and aggregate labeling programs, then distill."};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--runs-dir", g.runs_dir, "Root directory of run outputs")->capture_default_str();
    app.add_option("--run-id", g.run_id, "Run directory name under --runs-dir")->capture_default_str();
    app.add_flag("--force", g.force, "Overwrite this step's existing outputs");
    app.add_option("--seed", g.seed, "Seed for splitting and training")->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.add_flag("-q,--quiet", g.quiet, "Log errors only and skip the analysis table");

    std::function<int()> action;

    GenerateOpts gen;
    auto* sg = app.add_subcommand("generate", "Ask a model for labeling programs");
    sg->add_option("--task", gen.task, "Task pack name or path")->required();
    sg->add_option("--tasks-dir", gen.tasks_dir, "Directory of task packs");
    sg->add_option("--n", gen.n, "Number of programs to request")->capture_default_str();
    sg->add_option("--mock", gen.mock, "Replay responses from a fixture instead of calling the endpoint");
    sg->add_option("--config", gen.config, "JSON config: endpoint, model, temperature, retry, pricing");
    sg->add_option("--model", gen.model, "Model name");
    sg->add_option("--endpoint", gen.endpoint, "Chat-completions URL");
    sg->add_option("--temperature", gen.temperature, "Sampling temperature in [0, 2]");
    sg->add_option("--concurrency", gen.concurrency, "Requests in flight");
    sg->add_option("--concepts", gen.concepts, "Concept set JSON (score tasks)");
    sg->add_option("--supplement", gen.supplements,
                   "kind:path with kind description|exemplars|keywords|rules; repeatable, kept in order");
    sg->add_option("--n-exemplars", gen.n_exemplars, "Exemplars taken from an exemplars file")->capture_default_str();
    sg->callback([&] { action = [&] { return cmd_generate(gen, g); }; });

    ElicitOpts eli;
    auto* se = app.add_subcommand("elicit", "Ask a model for task concepts");
    se->add_option("--task", eli.task, "Task pack name or path")->required();
    se->add_option("--tasks-dir", eli.tasks_dir, "Directory of task packs");
    se->add_option("--mock", eli.mock, "Replay a fixture");
    se->add_option("--config", eli.config, "JSON config");
    se->add_option("--model", eli.model, "Model name");
    se->callback([&] { action = [&] { return cmd_elicit(eli, g); }; });

    ScoresOpts sco;
    auto* ss = app.add_subcommand("scores", "Turn record and concept embeddings into a score dataset");
    ss->add_option("--embeddings", sco.embeddings, "Embedding sidecar JSON")->required();
    ss->add_option("--task", sco.task, "Task pack supplying the classes");
    ss->add_option("--tasks-dir", sco.tasks_dir, "Directory of task packs");
    ss->add_option("--classes", sco.classes, "Comma-separated class names");
    ss->add_option("--name", sco.name, "Task name");
    ss->add_flag("--reject-spurious", sco.reject, "Subtract the sidecar's spurious concept directions first");
    ss->callback([&] { action = [&] { return cmd_scores(sco, g); }; });

    ApplyOpts app_o;
    auto* sa = app.add_subcommand("apply", "Run programs over a dataset into a vote matrix");
    sa->add_option("--task", app_o.task, "Task manifest JSON")->required();
    sa->add_option("--programs", app_o.programs, "Directory of .lf programs (default: the run's programs/)");
    sa->add_option("--dataset", app_o.dataset, "Dataset overriding the manifest's");
    sa->add_option("--threads", app_o.threads, "Worker threads (0: all cores)");
    sa->add_option("--budget-ms", app_o.budget_ms, "Per-record evaluation budget")->capture_default_str();
    sa->callback([&] { action = [&] { return cmd_apply(app_o, g); }; });

    AnalyzeOpts ana;
    auto* sn = app.add_subcommand("analyze", "Coverage, overlap, conflict and accuracy per program");
    sn->add_option("--votes", ana.votes, "Vote matrix (default: the run's votes.json)");
    sn->add_option("--task", ana.task, "Task manifest, for gold-label accuracy");
    sn->add_option("--threshold", ana.threshold, "Low-coverage flag threshold")->capture_default_str();
    sn->callback([&] { action = [&] { return cmd_analyze(ana, g); }; });

    AggregateOpts agg;
    auto* sm = app.add_subcommand("aggregate", "Fit a label model and write pseudolabels");
    sm->add_option("--votes", agg.votes, "Vote matrix (default: the run's votes.json)");
    sm->add_option("--model", agg.model, "mv, wmv, ds, triplet or snorkel-lite")->capture_default_str();
    sm->add_option("--params", agg.params, "Reuse fitted parameters instead of fitting");
    sm->add_option("--task", agg.task, "Task manifest, for gold labels (wmv weights, accuracy report)");
    sm->add_flag("--keep-flagged", agg.keep_flagged, "Keep programs below the coverage threshold");
    sm->add_option("--threshold", agg.threshold, "Low-coverage threshold")->capture_default_str();
    sm->add_option("--max-iter", agg.max_iter, "EM iteration cap")->capture_default_str();
    sm->add_option("--tol", agg.tol, "EM convergence tolerance")->capture_default_str();
    sm->add_option("--smoothing", agg.smoothing, "EM additive smoothing")->capture_default_str();
    sm->callback([&] { action = [&] { return cmd_aggregate(agg, g); }; });

    ExportOpts exp;
    auto* sx = app.add_subcommand("export", "Write the pseudolabeled training set");
    sx->add_option("--task", exp.task, "Task manifest JSON")->required();
    sx->add_option("--pseudolabels", exp.pseudolabels, "Pseudolabels (default: the run's)");
    sx->add_flag("--probabilistic", exp.probabilistic, "Keep full posteriors");
    sx->add_flag("--keep-uncovered", exp.keep_uncovered, "Keep records no program labeled");
    sx->callback([&] { action = [&] { return cmd_export(exp, g); }; });

    TrainOpts tr;
    auto* st = app.add_subcommand("train", "Train the distilled MLP");
    st->add_option("--task", tr.task, "Task manifest JSON")->required();
    st->add_option("--train", tr.train, "Training rows (default: the run's train.jsonl)");
    st->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
    st->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    st->add_option("--batch", tr.batch, "Minibatch size")->capture_default_str();
    st->add_option("--validation-fraction", tr.validation_fraction, "Held-out share of rows")->capture_default_str();
    st->add_option("--dims", tr.dims, "Hashed feature dimension (text)")->capture_default_str();
    st->callback([&] { action = [&] { return cmd_train(tr, g); }; });

    EvalOpts ev;
    auto* sv = app.add_subcommand("eval", "Average, worst-group accuracy and gap against gold");
    sv->add_option("--task", ev.task, "Task manifest JSON")->required();
    sv->add_option("--model", ev.model, "Distilled model JSON");
    sv->add_option("--pseudolabels", ev.pseudolabels, "Pseudolabels JSONL");
    sv->add_option("--dataset", ev.dataset, "Dataset (default: validation split for models, else the dataset)");
    sv->callback([&] { action = [&] { return cmd_eval(ev, g); }; });

    CheckOpts chk;
    auto* sk = app.add_subcommand("check", "Parse programs and report errors");
    sk->add_option("--task", chk.task, "Task manifest JSON")->required();
    sk->add_option("files", chk.files, "Program files")->required();
    sk->add_flag("--print", chk.print, "Print the canonical form");
    sk->callback([&] { action = [&] { return cmd_check(chk, g); }; });

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    setup_logging(g);
    try {
        return action ? action() : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace labelforge::cli
