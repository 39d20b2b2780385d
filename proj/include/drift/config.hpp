#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drift/env.hpp"
#include "drift/eval.hpp"
#include "drift/policy.hpp"
#include "drift/qlearn.hpp"

namespace drift {

/// Everything a pipeline needs. Defaults reproduce the reference experiment.
struct RunConfig {
    std::string app = "settings";
    std::string eval_app;                 // empty: "<app>_perturbed" when built in, else app
    std::vector<Objective> objectives{{"notifications_panel_opened", 1}};
    std::size_t episodes = 20;            // per objective
    std::size_t max_len = 100;
    std::uint64_t seed = 0;
    std::vector<std::string> exclude_events;
    std::string data;                     // episode file; generated in memory when empty
    std::string out = "out";
    std::string process;
    int min_count = 2;
    bool include_automation_id = true;
    TrainerConfig trainer;
    PolicySpec policy;
    std::string checkpoint;
    std::string qtable;
    std::string vocab;                    // empty: "<checkpoint>.vocab.json"
    std::size_t eval_steps = 1000;
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    std::vector<double> temperatures{0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0};
    std::size_t random_runs = 20;
    std::size_t random_episodes = 500;     // uncapped random-agent episodes for steps-to-task
    std::size_t qhash_epochs = 50;
    double qhash_learning_rate = 0.5;
    std::size_t jobs = 1;

    /// The app evaluations run on.
    std::string resolved_eval_app() const;

    /// Throws ConfigError with the field name.
    void validate() const;

    /// Canonical JSON of every field that influences results (not jobs/out).
    std::string to_json() const;
    /// Hex FNV-1a of to_json(); stamped into every artifact.
    std::string fingerprint() const;
};

/// Applies a JSON document on top of `config`. Unknown keys and ill-typed
/// values raise ConfigError naming the key.
void apply_config_json(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::string& path);

/// DRIFT_<KEY> variables (key upper-cased) override the matching fields.
/// Lists are comma separated; objectives accept "event" or "event:count".
void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& environment);
/// Reads DRIFT_* from the process environment.
std::map<std::string, std::string> drift_environment();

/// "event" or "event:count". Throws ConfigError.
Objective parse_objective(const std::string& text);

}  // namespace drift
