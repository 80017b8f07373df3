#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "labelforge/cli/cli.hpp"
#include "labelforge/prompt/cost.hpp"
#include "support/support.hpp"

using namespace labelforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = LABELFORGE_FIXTURES;
const fs::path kSpam = kFixtures / "spam";

int lf(const lf_test::TempDir& dir, std::vector<std::string> args) {
    std::vector<std::string> full = {"labelforge", "--runs-dir", (dir / "runs").string(), "-q"};
    full.insert(full.end(), args.begin(), args.end());
    return cli::run(full);
}

struct Shell {
    int status;
    std::string output;
};

Shell shell(const std::string& cmd) {
    Shell s{0, {}};
    FILE* p = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) s.output += buf.data();
    const int raw = pclose(p);
    s.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return s;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = lf_test::read_file(e.path());
    return files;
}

// A 100-record task where one program fires on exactly five records.
fs::path low_coverage_task(const lf_test::TempDir& dir) {
    std::string rows;
    for (int i = 0; i < 100; ++i) {
        json r = {{"id", "r" + std::to_string(i)}, {"text", i < 5 ? "a rare comment" : "an ordinary comment"},
                  {"gold", i % 2}};
        rows += r.dump() + "\n";
    }
    lf_test::write_file(dir / "low/data.jsonl", rows);
    lf_test::write_file(dir / "low/programs/common.lf", "rule: contains(\"comment\") -> ham\ndefault -> ABSTAIN\n");
    lf_test::write_file(dir / "low/programs/rare.lf", "rule: contains(\"rare\") -> spam\ndefault -> ABSTAIN\n");
    lf_test::write_file(dir / "low/task.json",
                        R"({"name":"low","classes":["spam","ham"],"modality":"text","dataset":"data.jsonl"})");
    return dir / "low/task.json";
}

}  // namespace

TEST_CASE("generate with a mock fixture writes ten programs and their raw responses") {
    lf_test::TempDir dir;
    REQUIRE(lf(dir, {"generate", "--task", "youtube", "--n", "10", "--mock", (kFixtures / "mock_ok.json").string()}) ==
            cli::kExitOk);
    const auto run = dir / "runs/default";
    int lf_files = 0, raw_files = 0;
    for (const auto& e : fs::directory_iterator(run / "programs")) lf_files += e.path().extension() == ".lf";
    for (const auto& e : fs::directory_iterator(run / "raw")) raw_files += e.path().extension() == ".json";
    CHECK(lf_files == 10);
    CHECK(raw_files == 10);
    auto manifest = json::parse(lf_test::read_file(run / "manifest.json"));
    CHECK(manifest["config"]["mock"].get<std::string>().find("mock_ok.json") != std::string::npos);
}

TEST_CASE("the persisted cost report matches re-estimating over the saved texts") {
    lf_test::TempDir dir;
    REQUIRE(lf(dir, {"generate", "--task", "youtube", "--n", "10", "--mock", (kFixtures / "mock_ok.json").string()}) ==
            cli::kExitOk);
    const auto run = dir / "runs/default";
    const std::string prompt_text = lf_test::read_file(run / "prompt.txt");
    std::vector<std::string> ins, outs;
    for (const auto& e : fs::directory_iterator(run / "raw")) {
        auto raw = json::parse(lf_test::read_file(e.path()));
        if (!raw["ok"].get<bool>()) continue;
        auto body = json::parse(raw["attempts"].back()["body"].get<std::string>());
        ins.push_back(prompt_text);
        outs.push_back(body["choices"][0]["message"]["content"].get<std::string>());
    }
    REQUIRE(outs.size() == 10);
    prompt::Pricing pricing;
    pricing.input_rate = 0.0005;
    pricing.output_rate = 0.0015;
    auto expected = prompt::estimate_cost(ins, outs, pricing);
    auto saved = json::parse(lf_test::read_file(run / "cost.json"));
    CHECK(saved["input_tokens"].get<std::size_t>() == expected.input_tokens);
    CHECK(saved["output_tokens"].get<std::size_t>() == expected.output_tokens);
    CHECK(saved["dollars"].get<double>() == doctest::Approx(expected.dollars).epsilon(1e-12));
    CHECK(expected.dollars > 0.0);
}

TEST_CASE("generate without a key or a mock names the environment variable") {
    lf_test::TempDir dir;
    auto r = shell("env -u OPENAI_API_KEY " + std::string(LABELFORGE_BIN) + " --runs-dir " + (dir / "runs").string() +
                   " generate --task youtube --n 2");
    CHECK(r.status == cli::kExitError);
    CHECK(r.output.find("OPENAI_API_KEY") != std::string::npos);
    CHECK(r.output.find("--mock") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "runs/default/programs"));
}

TEST_CASE("analyze exits 2 and flags a 5%-coverage program") {
    lf_test::TempDir dir;
    auto task = low_coverage_task(dir).string();
    REQUIRE(lf(dir, {"apply", "--task", task, "--programs", (dir / "low/programs").string()}) == cli::kExitOk);
    CHECK(lf(dir, {"analyze"}) == cli::kExitFlagged);
    auto j = json::parse(lf_test::read_file(dir / "runs/default/analysis.json"));
    CHECK(j["any_flagged"] == true);
    std::map<std::string, bool> flags;
    std::map<std::string, double> coverage;
    for (const auto& p : j["programs"]) {
        flags[p["program_id"].get<std::string>()] = p["flagged_low_coverage"].get<bool>();
        coverage[p["program_id"].get<std::string>()] = p["coverage"].get<double>();
    }
    CHECK(flags.at("rare"));
    CHECK(coverage.at("rare") == 0.05);
    CHECK_FALSE(flags.at("common"));

    // The default rule drops flagged programs before fitting; --keep-flagged keeps them.
    REQUIRE(lf(dir, {"aggregate", "--model", "ds"}) == cli::kExitOk);
    auto params = json::parse(lf_test::read_file(dir / "runs/default/params.json"));
    CHECK(params["program_ids"] == json::array({"common"}));
    REQUIRE(lf(dir, {"--force", "aggregate", "--model", "ds", "--keep-flagged"}) == cli::kExitOk);
    params = json::parse(lf_test::read_file(dir / "runs/default/params.json"));
    CHECK(params["program_ids"].size() == 2);
}

TEST_CASE("aggregate rejects params fitted on a different number of programs") {
    lf_test::TempDir dir;
    const auto task = (kSpam / "task.json").string();
    REQUIRE(lf(dir, {"apply", "--task", task, "--programs", (kSpam / "programs").string()}) == cli::kExitOk);
    REQUIRE(lf(dir, {"aggregate", "--model", "ds"}) == cli::kExitOk);
    auto params = json::parse(lf_test::read_file(dir / "runs/default/params.json"));
    REQUIRE(params["program_ids"].size() == 10);

    // Refit on a run with one program fewer, then feed those params to the full run.
    fs::create_directories(dir / "fewer");
    for (const auto& e : fs::directory_iterator(kSpam / "programs"))
        if (e.path().filename() != "p10_excited.lf") fs::copy_file(e.path(), dir / "fewer" / e.path().filename());
    REQUIRE(lf(dir, {"--run-id", "fewer", "apply", "--task", task, "--programs", (dir / "fewer").string()}) ==
            cli::kExitOk);
    REQUIRE(lf(dir, {"--run-id", "fewer", "aggregate", "--model", "ds"}) == cli::kExitOk);

    auto r = shell(std::string(LABELFORGE_BIN) + " --runs-dir " + (dir / "runs").string() +
                   " --force aggregate --params " + (dir / "runs/fewer/params.json").string());
    CHECK(r.status == cli::kExitError);
    CHECK(r.output.find("9 programs") != std::string::npos);
    CHECK(r.output.find("10") != std::string::npos);

    // Matching params are reused without refitting.
    CHECK(lf(dir, {"--force", "aggregate", "--params", (dir / "runs/default/params.json").string()}) == cli::kExitOk);
}

TEST_CASE("no step overwrites earlier outputs without --force") {
    lf_test::TempDir dir;
    const auto task = (kSpam / "task.json").string();
    const auto programs = (kSpam / "programs").string();
    REQUIRE(lf(dir, {"apply", "--task", task, "--programs", programs}) == cli::kExitOk);
    const auto before = lf_test::read_file(dir / "runs/default/votes.json");
    lf_test::write_file(dir / "runs/default/votes.json", "sentinel");
    CHECK(lf(dir, {"apply", "--task", task, "--programs", programs}) == cli::kExitError);
    CHECK(lf_test::read_file(dir / "runs/default/votes.json") == "sentinel");
    CHECK(lf(dir, {"--force", "apply", "--task", task, "--programs", programs}) == cli::kExitOk);
    CHECK(lf_test::read_file(dir / "runs/default/votes.json") == before);

    REQUIRE(lf(dir, {"aggregate", "--model", "mv"}) == cli::kExitOk);
    CHECK(lf(dir, {"aggregate", "--model", "mv"}) == cli::kExitError);
}

TEST_CASE("the offline pipeline is byte-identical when rerun with the same seed") {
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    lf_test::TempDir dir;
    const auto task = (kSpam / "task.json").string();
    auto pipeline = [&](bool force) {
        std::vector<std::string> f = force ? std::vector<std::string>{"--force"} : std::vector<std::string>{};
        auto step = [&](std::vector<std::string> args) {
            std::vector<std::string> a = f;
            a.insert(a.end(), {"--seed", "3"});
            a.insert(a.end(), args.begin(), args.end());
            return lf(dir, a);
        };
        REQUIRE(step({"apply", "--task", task, "--programs", (kSpam / "programs").string()}) == cli::kExitOk);
        REQUIRE(step({"analyze", "--task", task}) == cli::kExitOk);
        REQUIRE(step({"aggregate", "--model", "ds"}) == cli::kExitOk);
        REQUIRE(step({"export", "--task", task}) == cli::kExitOk);
        REQUIRE(step({"train", "--task", task, "--epochs", "5"}) == cli::kExitOk);
        REQUIRE(step({"eval", "--task", task, "--model", (dir / "runs/default/model.json").string()}) ==
                cli::kExitOk);
    };
    pipeline(false);
    auto first = snapshot(dir / "runs/default");
    pipeline(true);
    auto second = snapshot(dir / "runs/default");
    unsetenv("SOURCE_DATE_EPOCH");
    REQUIRE(first.size() == second.size());
    for (const auto& [name, bytes] : first) {
        if (name == "manifest.json") continue;  // records each step, so it grows on rerun
        INFO(name);
        CHECK(second.at(name) == bytes);
    }
    CHECK(first.count("model.json") == 1);
    CHECK(first.count("eval.json") == 1);
}

TEST_CASE("usage errors exit 1") {
    lf_test::TempDir dir;
    CHECK(lf(dir, {"aggregate", "--model", "nonsense"}) == cli::kExitError);
    CHECK(lf(dir, {"apply"}) == cli::kExitError);
    CHECK(lf(dir, {"analyze"}) == cli::kExitError);  // no votes yet
}
