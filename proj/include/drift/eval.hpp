#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "drift/data.hpp"
#include "drift/env.hpp"
#include "drift/policy.hpp"
#include "drift/qlearn.hpp"

namespace drift {

struct EvalReport {
    double total_reward = 0.0;
    std::vector<int> objective_counts;             // parallel to the objectives
    std::vector<std::size_t> steps_per_reward;     // steps between consecutive rewards
    std::size_t unique_states = 0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    int fold = -1;

    /// NaN when no reward was collected.
    double mean_steps_per_reward() const;
};

/// Steps the simulator n_steps times, resetting whenever an episode is done.
/// Episode e is reset with derive_seed(seed, e + 1); the agent draws from
/// derive_seed(seed, 0). Stale actions are skipped unless the agent is strict.
EvalReport evaluate_policy(Agent& agent, const AppSpec& spec, std::span<const Objective> objectives,
                           std::size_t n_steps, std::uint64_t seed);

struct Stat {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation; 0 for fewer than two values
};

Stat mean_sd(std::span<const double> values);
/// Ranks starting at 1; ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);
/// Pearson correlation of the average ranks. NaN when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct SweepRow {
    double temperature = 0.0;
    Stat reward;
    Stat unique_states;
    std::vector<Stat> per_objective;  // reward counts × r_norm, per objective
};

struct SweepOptions {
    std::size_t n_steps = 1000;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

/// Evaluates the temperature sampler of every network (each with its own
/// vocabulary) at every temperature. Network k uses evaluation seed
/// derive_seed(seed, k) at every temperature.
std::vector<SweepRow> temperature_sweep(std::span<const PolicyResources> networks, const AppSpec& spec,
                                        std::span<const Objective> objectives, std::span<const double> temperatures,
                                        const SweepOptions& options);

/// temperature_sweep for two or more objectives. Throws ConfigError otherwise.
std::vector<SweepRow> multi_task_eval(std::span<const PolicyResources> networks, const AppSpec& spec,
                                      std::span<const Objective> objectives, std::span<const double> temperatures,
                                      const SweepOptions& options);

/// The uniform-random agent over `runs` evaluations (seeds derive_seed(seed, k)).
SweepRow random_baseline(const AppSpec& spec, std::span<const Objective> objectives, std::size_t runs,
                         const SweepOptions& options, std::span<const ActionType> types = default_action_types());

/// Steps the uniform-random agent needs to complete the objective, one
/// uncapped episode per entry (episode e resets with derive_seed(seed, e + 1)).
/// Throws UnreachableObjective when an episode exceeds `step_limit`.
std::vector<std::size_t> random_steps_to_objective(const AppSpec& spec, const Objective& objective,
                                                   std::size_t episodes, std::uint64_t seed,
                                                   std::size_t step_limit = 10'000'000,
                                                   std::span<const ActionType> types = default_action_types());

/// Expected number of steps for the uniform-random agent to complete the
/// objective from the initial screen, solved exactly over (screen, count)
/// states. Throws UnreachableObjective when the expectation is infinite.
double expected_hitting_time(const AppSpec& spec, const Objective& objective,
                             std::span<const ActionType> types = default_action_types());

/// Optimal action values of the screen-level MDP for a single-event objective.
struct MdpSolution {
    std::map<std::string, std::vector<UIAction>> actions;  // enumeration order
    std::map<std::string, std::vector<double>> q;           // parallel to actions
    std::map<std::string, double> value;

    /// Indices of actions within `tolerance` of the best value.
    std::vector<std::size_t> optimal_actions(const std::string& screen, double tolerance = 1e-9) const;
};

MdpSolution value_iteration(const AppSpec& spec, const Objective& objective, double discount,
                            std::span<const ActionType> types = default_action_types(), double tolerance = 1e-13);

/// Screens visited by following the first optimal action from the initial
/// screen until the objective fires (the final screen is not included).
std::vector<std::string> optimal_path(const AppSpec& spec, const Objective& objective, const MdpSolution& solution);

struct CrossValidationConfig {
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    TrainerConfig trainer;
    std::size_t eval_steps = 1000;
    std::string process;             // state filter used for training and acting
    int min_count = 2;
    bool include_automation_id = true;
    std::vector<ActionType> action_types{default_action_types().begin(), default_action_types().end()};
    std::size_t jobs = 1;
    bool learning_curve = true;      // evaluate greedily every trainer.eval_every steps
};

struct CrossValidationRun {
    std::size_t fold = 0;
    std::uint64_t seed = 0;
    EvalReport report;                // greedy, eval_steps on the evaluation app
    std::vector<EvalPoint> curve;
    PolicyResources policy;           // network, vocabulary, process and action types
};

struct CurvePoint {
    long step = 0;
    Stat reward;
    Stat unique_states;
};

struct CrossValidationResult {
    std::vector<CrossValidationRun> runs;  // fold-major, then seed
    std::vector<CurvePoint> curve;
    /// Mean ± sd over runs of each run's mean steps per reward; NaN mean when any run failed.
    Stat steps_per_reward;
    std::size_t failed_runs = 0;
};

/// Trains one network per (fold, seed) on the episodes outside the fold and
/// evaluates its greedy policy on `eval_spec`. Evaluation seed of a run is
/// derive_seed(seed, fold + 1).
CrossValidationResult cross_validate(const EpisodeStore& store, std::span<const Objective> objectives,
                                     const AppSpec& eval_spec, const CrossValidationConfig& config);

/// Turns an event name such as notifications_panel_opened into NotificationsPanelOpened.
std::string camel_case(std::string_view event_name);

/// Plot-data CSVs. Every file starts with a "# config=<fingerprint>" line.
void write_single_task_csv(const CrossValidationResult& result, const std::string& path, const std::string& fingerprint);
void write_single_task_random_csv(std::span<const CurvePoint> curve, const SweepRow& random, const std::string& path,
                                  const std::string& fingerprint);
void write_temperature_csv(std::span<const SweepRow> rows, const std::string& path, const std::string& fingerprint);
void write_pages_seen_csv(std::span<const SweepRow> rows, const std::string& path, const std::string& fingerprint);
void write_temperature_random_csv(std::span<const SweepRow> rows, const SweepRow& random, const std::string& path,
                                  const std::string& fingerprint);
void write_random_pages_seen_csv(std::span<const SweepRow> rows, const SweepRow& random, const std::string& path,
                                 const std::string& fingerprint);
void write_multiple_rewards_csv(std::span<const SweepRow> rows, std::span<const Objective> objectives,
                                const std::string& path, const std::string& fingerprint);

}  // namespace drift
