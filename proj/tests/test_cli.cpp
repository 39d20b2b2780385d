#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "drift/cli.hpp"
#include "drift/config.hpp"
#include "drift/errors.hpp"

using namespace drift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "drift");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream log, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), log, err);
    if (err_text) *err_text = err.str();
    return code;
}

}  // namespace

TEST(Config, DefaultsValidateAndFingerprintIsStable) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.fingerprint(), RunConfig{}.fingerprint());
    EXPECT_EQ(c.resolved_eval_app(), "settings_perturbed");
    RunConfig d = c;
    d.jobs = 8;
    d.out = "elsewhere";
    EXPECT_EQ(d.fingerprint(), c.fingerprint());
    d.seed = 1;
    EXPECT_NE(d.fingerprint(), c.fingerprint());
}

TEST(Config, JsonAppliesKnownKeysAndRejectsUnknown) {
    RunConfig c;
    apply_config_json(c, R"({"total_steps": 7, "objectives": ["a:2", "b"], "temperatures": [0.5, 2], "include_automation_id": false})");
    EXPECT_EQ(c.trainer.total_steps, 7);
    EXPECT_EQ(c.objectives, (std::vector<Objective>{{"a", 2}, {"b", 1}}));
    EXPECT_EQ(c.temperatures, (std::vector<double>{0.5, 2.0}));
    EXPECT_FALSE(c.include_automation_id);
    EXPECT_THROW(apply_config_json(c, R"({"bogus": 1})"), ConfigError);
    EXPECT_THROW(apply_config_json(c, R"({"total_steps": "many"})"), ConfigError);
    EXPECT_THROW(apply_config_json(c, "not json"), ConfigError);
}

TEST(Config, RoundTripThroughJson) {
    RunConfig c;
    c.seed = 5;
    c.trainer.discount = 0.3;
    c.objectives = {{"x", 3}};
    RunConfig d;
    apply_config_json(d, c.to_json());
    EXPECT_EQ(d.to_json(), c.to_json());
}

TEST(Config, EnvironmentOverrides) {
    RunConfig c;
    apply_env_overrides(c, {{"DRIFT_SEED", "9"}, {"DRIFT_SEEDS", "4,5"}, {"DRIFT_OBJECTIVES", "a,b:3"},
                            {"DRIFT_INCLUDE_AUTOMATION_ID", "false"}, {"DRIFT_LEARNING_RATE", "0.5"}, {"HOME", "/"}});
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
    EXPECT_EQ(c.objectives, (std::vector<Objective>{{"a", 1}, {"b", 3}}));
    EXPECT_FALSE(c.include_automation_id);
    EXPECT_EQ(c.trainer.learning_rate, 0.5);
    EXPECT_THROW(apply_env_overrides(c, {{"DRIFT_NOT_A_KEY", "1"}}), ConfigError);
    EXPECT_THROW(apply_env_overrides(c, {{"DRIFT_SEED", "-x"}}), ConfigError);
}

TEST(Config, ValidationNamesTheField) {
    RunConfig c;
    c.folds = 1;
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("folds"), std::string::npos);
    }
    EXPECT_THROW(parse_objective("event:0"), ConfigError);
    EXPECT_THROW(parse_objective(""), ConfigError);
    EXPECT_EQ(parse_objective("e:4"), (Objective{"e", 4}));
}

TEST(Cli, UnknownConfigKeyExitsWithTwo) {
    TempDir dir("drift_cli_unknown");
    write(dir / "c.json", R"({"bogus": true})");
    std::string err;
    EXPECT_EQ(cli({"--config", dir / "c.json", "oracle", "--out", dir / "o"}, &err), kExitConfigError);
    EXPECT_NE(err.find("bogus"), std::string::npos);
}

TEST(Cli, MissingCommandOrInputIsAConfigError) {
    EXPECT_EQ(cli({}), kExitConfigError);
    EXPECT_EQ(cli({"eval", "--checkpoint", "/nonexistent/model.json"}), kExitConfigError);
    EXPECT_EQ(cli({"oracle", "--app", "no_such_app"}), kExitPipelineError);
}

TEST(Cli, GradcheckPasses) { EXPECT_EQ(cli({"gradcheck"}), kExitOk); }

TEST(Cli, OracleWritesCsv) {
    TempDir dir("drift_cli_oracle");
    ASSERT_EQ(cli({"oracle", "--out", dir.path.string()}), kExitOk);
    const std::string text = slurp(dir / "oracle.csv");
    EXPECT_EQ(text.rfind("# config=", 0), 0u);
    EXPECT_NE(text.find("notifications_panel_opened"), std::string::npos);
}

TEST(Cli, TrainAndEvalAreByteDeterministic) {
    TempDir d("drift_cli_det");
    write(d / "c.json", R"({"total_steps": 40, "eval_every": 20, "eval_steps": 100, "episodes": 6})");
    const std::vector<std::string> files = {"episodes.jsonl", "model.json", "model.json.vocab.json",
                                            "model.json.metrics.csv", "eval.csv"};
    std::vector<std::vector<std::string>> outputs;
    for (int round = 0; round < 2; ++round) {
        ASSERT_EQ(cli({"--config", d / "c.json", "gen-data", "--out", d / "episodes.jsonl"}), kExitOk);
        ASSERT_EQ(cli({"--config", d / "c.json", "train", "--data", d / "episodes.jsonl", "--out", d / "model.json"}),
                  kExitOk);
        ASSERT_EQ(cli({"--config", d / "c.json", "eval", "--checkpoint", d / "model.json", "--out", d.path.string()}),
                  kExitOk);
        outputs.emplace_back();
        for (const auto& f : files) {
            outputs.back().push_back(slurp(d / f));
            fs::remove(d / f);
        }
    }
    for (std::size_t k = 0; k < files.size(); ++k) {
        EXPECT_FALSE(outputs[0][k].empty()) << files[k];
        EXPECT_EQ(outputs[0][k], outputs[1][k]) << files[k];
    }
}
