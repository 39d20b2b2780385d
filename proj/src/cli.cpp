#include "drift/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>

#include <CLI11.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"

namespace drift {

namespace fs = std::filesystem;

const std::vector<std::string>& cli_commands() {
    static const std::vector<std::string> commands = {"gen-data", "train", "eval", "sweep", "xval", "oracle", "gradcheck"};
    return commands;
}

EpisodeStore load_or_collect(const RunConfig& config) {
    if (!config.data.empty()) return EpisodeStore::load(config.data);
    const AppSpec spec = resolve_app(config.app);
    EpisodeStore store(spec.name, config.seed, "random");
    for (std::size_t k = 0; k < config.objectives.size(); ++k) {
        const auto& objective = config.objectives[k];
        CollectOptions options;
        for (const auto& e : config.exclude_events) {
            if (e != objective.event_name) options.exclude_events.push_back(e);
        }
        store.append(collect_random_episodes(spec, objective, config.episodes, config.max_len,
                                             derive_seed(config.seed, 100 + k), options));
    }
    return store;
}

CrossValidationConfig xval_config(const RunConfig& config, bool curve) {
    CrossValidationConfig cv;
    cv.folds = config.folds;
    cv.seeds = config.seeds;
    cv.trainer = config.trainer;
    cv.trainer.seed = config.seed;
    cv.eval_steps = config.eval_steps;
    cv.process = config.process;
    cv.min_count = config.min_count;
    cv.include_automation_id = config.include_automation_id;
    cv.jobs = config.jobs;
    cv.learning_curve = curve;
    return cv;
}

namespace {

std::string objectives_label(std::span<const Objective> objectives) {
    std::string out;
    for (const auto& o : objectives) out += (out.empty() ? "" : "+") + o.event_name;
    return out;
}

fs::path output_dir(const RunConfig& config) {
    fs::path dir(config.out);
    fs::create_directories(dir);
    return dir;
}

std::string vocab_path(const RunConfig& config) {
    return config.vocab.empty() ? config.checkpoint + ".vocab.json" : config.vocab;
}

std::string mean_sd_text(const Stat& s) {
    if (std::isnan(s.mean)) return "Fail";
    std::ostringstream os;
    os << std::setprecision(4) << s.mean << " ± " << s.sd;
    return os.str();
}

int gen_data(const RunConfig& config, std::ostream& log) {
    if (!config.data.empty()) throw ConfigError("data: gen-data writes episodes; use --out for the destination");
    const EpisodeStore store = load_or_collect(config);
    fs::path out(config.out);
    if (fs::is_directory(out)) out /= "episodes.jsonl";
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    store.save(out.string());
    std::size_t transitions = 0;
    for (const auto& e : store) transitions += e.transitions.size();
    log << "wrote " << store.size() << " episodes (" << transitions << " transitions) to " << out.string() << '\n';
    return kExitOk;
}

int train_command(const RunConfig& config, std::ostream& log) {
    const EpisodeStore store = load_or_collect(config);
    fs::path out(config.out);
    if (fs::is_directory(out)) out /= config.policy.kind == PolicyKind::QHash ? "qtable.json" : "checkpoint.json";
    if (out.has_parent_path()) fs::create_directories(out.parent_path());

    if (config.policy.kind == PolicyKind::QHash) {
        const auto transitions = prepare_transitions(store, config.objectives, config.process);
        TrainerConfig tc = config.trainer;
        tc.seed = config.seed;
        const auto table = qhash_fit(transitions, tc, {config.qhash_learning_rate, config.qhash_epochs});
        table.save(out.string());
        log << "wrote Q-table with " << table.size() << " entries to " << out.string() << '\n';
        return kExitOk;
    }

    auto vocab = std::make_shared<const Vocabulary>(
        build_vocabulary(store.episodes(), config.min_count, config.include_automation_id));
    const TrainingSet data = build_training_set(store, config.objectives, config.process, *vocab);
    TrainerConfig tc = config.trainer;
    tc.seed = config.seed;

    const AppSpec eval_spec = resolve_app(config.resolved_eval_app());
    EvalHook hook;
    if (tc.eval_every > 0) {
        hook = [&](const QNetwork& net, long step) {
            PolicyResources r;
            r.network = std::make_shared<const QNetwork>(net);
            r.vocab = vocab;
            r.process = config.process;
            auto agent = make_agent(PolicySpec{PolicyKind::Greedy, 1.0, 0}, r);
            const auto report = evaluate_policy(*agent, eval_spec, config.objectives, config.eval_steps, config.seed);
            log << "step " << step << ": eval reward " << report.total_reward << ", unique states "
                << report.unique_states << '\n';
            return EvalPoint{step, report.total_reward, report.unique_states};
        };
    }
    auto result = train(data, tc, hook);
    result.network.vocab_fingerprint = vocab->fingerprint();
    result.network.save(out.string());
    vocab->save(out.string() + ".vocab.json");
    write_metrics_csv(result, out.string() + ".metrics.csv", config.fingerprint());
    log << "trained on " << data.transitions.size() << " transitions (" << data.states.size() << " distinct states); "
        << "final loss " << (result.losses.empty() ? 0.0 : result.losses.back()) << "; wrote " << out.string() << '\n';
    return kExitOk;
}

PolicyResources load_resources(const RunConfig& config) {
    PolicyResources r;
    r.process = config.process;
    if (config.policy.kind == PolicyKind::Greedy || config.policy.kind == PolicyKind::Sampler) {
        if (config.checkpoint.empty()) throw ConfigError("checkpoint: required by the " +
                                                         std::string(to_string(config.policy.kind)) + " policy");
        auto vocab = std::make_shared<const Vocabulary>(Vocabulary::load(vocab_path(config)));
        r.network = std::make_shared<const QNetwork>(QNetwork::load(config.checkpoint, *vocab));
        r.vocab = vocab;
    }
    if (config.policy.kind == PolicyKind::QHash) {
        if (config.qtable.empty()) throw ConfigError("qtable: required by the qhash policy");
        r.table = std::make_shared<const QHashTable>(QHashTable::load(config.qtable));
    }
    return r;
}

int eval_command(const RunConfig& config, std::ostream& log) {
    const AppSpec spec = resolve_app(config.app);
    const auto resources = load_resources(config);
    auto agent = make_agent(config.policy, resources);
    const auto report = evaluate_policy(*agent, spec, config.objectives, config.eval_steps, config.seed);

    const fs::path path = output_dir(config) / "eval.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "# config=" << config.fingerprint() << "\nseed,total_reward,unique_states,mean_steps_per_reward";
    for (const auto& o : config.objectives) out << ',' << camel_case(o.event_name) << "Count";
    out << '\n' << report.seed << ',' << report.total_reward << ',' << report.unique_states << ','
        << report.mean_steps_per_reward();
    for (int c : report.objective_counts) out << ',' << c;
    out << '\n';
    log << to_string(config.policy.kind) << " on " << spec.name << ": reward " << report.total_reward << " in "
        << report.steps << " steps, " << report.unique_states << " unique states, "
        << report.steps_per_reward.size() << " completions";
    if (!report.steps_per_reward.empty()) log << ", " << report.mean_steps_per_reward() << " steps per reward";
    log << '\n';
    return kExitOk;
}

SweepRow random_reference(const RunConfig& config, const AppSpec& spec) {
    return random_baseline(spec, config.objectives, config.random_runs,
                           SweepOptions{config.eval_steps, derive_seed(config.seed, 11), config.jobs});
}

int sweep_command(const RunConfig& config, std::ostream& log) {
    const AppSpec eval_spec = resolve_app(config.resolved_eval_app());
    std::vector<PolicyResources> networks;
    if (!config.checkpoint.empty()) {
        RunConfig greedy = config;
        greedy.policy.kind = PolicyKind::Greedy;
        networks.push_back(load_resources(greedy));
    } else {
        const auto result = cross_validate(load_or_collect(config), config.objectives, eval_spec, xval_config(config, false));
        for (const auto& run : result.runs) networks.push_back(run.policy);
    }
    const SweepOptions options{config.eval_steps, derive_seed(config.seed, 12), config.jobs};
    const auto rows = temperature_sweep(networks, eval_spec, config.objectives, config.temperatures, options);
    const SweepRow random = random_reference(config, eval_spec);

    const fs::path dir = output_dir(config);
    const std::string fp = config.fingerprint();
    write_temperature_csv(rows, (dir / "temperature.csv").string(), fp);
    write_pages_seen_csv(rows, (dir / "pages_seen.csv").string(), fp);
    write_temperature_random_csv(rows, random, (dir / "temperaturerandom.csv").string(), fp);
    write_random_pages_seen_csv(rows, random, (dir / "randompagesseen.csv").string(), fp);
    if (config.objectives.size() > 1) write_multiple_rewards_csv(rows, config.objectives, (dir / "multiplerewards.csv").string(), fp);

    log << "temperature  reward            unique states\n";
    for (const auto& r : rows) {
        log << std::setw(11) << r.temperature << "  " << std::setw(16) << mean_sd_text(r.reward) << "  "
            << mean_sd_text(r.unique_states) << '\n';
    }
    log << "random       " << std::setw(16) << mean_sd_text(random.reward) << "  " << mean_sd_text(random.unique_states)
        << '\n';
    return kExitOk;
}

int xval_command(const RunConfig& config, std::ostream& log) {
    const AppSpec train_spec = resolve_app(config.app);
    const AppSpec eval_spec = resolve_app(config.resolved_eval_app());
    const EpisodeStore store = load_or_collect(config);
    const auto result = cross_validate(store, config.objectives, eval_spec, xval_config(config, true));

    // The same networks and tabular baselines on the training-variant simulator.
    const auto splits = k_fold_split(store, config.folds, derive_seed(config.seed, 7));
    std::vector<EvalReport> drift_train(result.runs.size()), qhash_train(result.runs.size()), qhash_eval(result.runs.size());
    parallel_for(result.runs.size(), config.jobs, [&](std::size_t c) {
        const auto& run = result.runs[c];
        const std::uint64_t eval_seed = derive_seed(run.seed, run.fold + 1);
        auto greedy = make_agent(PolicySpec{PolicyKind::Greedy, 1.0, 0}, run.policy);
        drift_train[c] = evaluate_policy(*greedy, train_spec, config.objectives, config.eval_steps, eval_seed);

        TrainerConfig tc = config.trainer;
        tc.seed = run.seed;
        PolicyResources r;
        r.process = config.process;
        r.table = std::make_shared<const QHashTable>(
            qhash_fit(prepare_transitions(splits[run.fold].first, config.objectives, config.process), tc,
                      {config.qhash_learning_rate, config.qhash_epochs}));
        auto qhash = make_agent(PolicySpec{PolicyKind::QHash, 1.0, 0}, r);
        qhash_train[c] = evaluate_policy(*qhash, train_spec, config.objectives, config.eval_steps, eval_seed);
        qhash_eval[c] = evaluate_policy(*qhash, eval_spec, config.objectives, config.eval_steps, eval_seed);
    });
    auto steps_stat = [](std::span<const EvalReport> reports) {
        std::vector<double> v;
        for (const auto& r : reports) v.push_back(r.mean_steps_per_reward());
        return mean_sd(v);
    };
    const Stat drift_train_stat = steps_stat(drift_train);
    const Stat qhash_train_stat = steps_stat(qhash_train);
    const Stat qhash_eval_stat = steps_stat(qhash_eval);

    const SweepRow random = random_reference(config, eval_spec);
    std::vector<double> random_gaps;
    for (std::size_t k = 0; k < config.objectives.size(); ++k) {
        for (auto steps : random_steps_to_objective(eval_spec, config.objectives[k], config.random_episodes,
                                                    derive_seed(config.seed, 13 + k))) {
            random_gaps.push_back(static_cast<double>(steps));
        }
    }
    const Stat random_steps = mean_sd(random_gaps);
    double oracle = std::numeric_limits<double>::quiet_NaN();
    if (config.objectives.size() == 1) oracle = expected_hitting_time(eval_spec, config.objectives.front());

    const fs::path dir = output_dir(config);
    const std::string fp = config.fingerprint();
    write_single_task_csv(result, (dir / "single_task.csv").string(), fp);
    write_single_task_random_csv(result.curve, random, (dir / "single_task_random.csv").string(), fp);
    {
        std::ofstream out(dir / "results_table.csv");
        if (!out) throw IoError("cannot write results_table.csv");
        out << "# config=" << fp << '\n'
            << "task,drift_train_mean,drift_train_sd,drift_eval_mean,drift_eval_sd,qhash_train_mean,qhash_train_sd,"
               "qhash_eval_mean,qhash_eval_sd,random_mean,random_sd,random_oracle\n";
        out << std::setprecision(12) << objectives_label(config.objectives) << ',' << drift_train_stat.mean << ','
            << drift_train_stat.sd << ',' << result.steps_per_reward.mean << ',' << result.steps_per_reward.sd << ','
            << qhash_train_stat.mean << ',' << qhash_train_stat.sd << ',' << qhash_eval_stat.mean << ','
            << qhash_eval_stat.sd << ',' << random_steps.mean << ',' << random_steps.sd << ',' << oracle << '\n';
    }
    for (std::size_t c = 0; c < result.runs.size(); ++c) {
        const auto& run = result.runs[c];
        log << "fold " << run.fold << " seed " << run.seed << ": train reward " << drift_train[c].total_reward
            << ", eval reward " << run.report.total_reward << '\n';
    }
    log << "task: " << objectives_label(config.objectives) << " (" << result.runs.size() << " runs)\n"
        << "  DRIFT-Greedy  train " << mean_sd_text(drift_train_stat) << ", eval " << mean_sd_text(result.steps_per_reward)
        << '\n'
        << "  Q-hash        train " << mean_sd_text(qhash_train_stat) << ", eval " << mean_sd_text(qhash_eval_stat) << '\n'
        << "  Random        " << mean_sd_text(random_steps);
    if (!std::isnan(oracle)) log << " (hitting-time oracle " << std::setprecision(6) << oracle << ")";
    log << '\n';
    return kExitOk;
}

int oracle_command(const RunConfig& config, std::ostream& log) {
    const AppSpec spec = resolve_app(config.app);
    const fs::path dir = output_dir(config);
    std::ofstream out(dir / "oracle.csv");
    if (!out) throw IoError("cannot write oracle.csv");
    out << "# config=" << config.fingerprint() << "\nobjective,hitting_time,optimal_steps\n" << std::setprecision(12);
    for (const auto& objective : config.objectives) {
        const double h = expected_hitting_time(spec, objective);
        std::size_t steps = 0;
        if (objective.target_count == 1) {
            steps = optimal_path(spec, objective, value_iteration(spec, objective, config.trainer.discount)).size();
        }
        out << objective.event_name << ',' << h << ',' << steps << '\n';
        log << spec.name << '/' << objective.event_name << ": random-agent hitting time " << std::setprecision(6) << h;
        if (steps) log << ", optimal path " << steps << " steps";
        log << '\n';
    }
    return kExitOk;
}

int gradcheck_command(const RunConfig& config, std::ostream& log) {
    const AppSpec spec = resolve_app(config.app);
    const auto store = collect_random_episodes(spec, config.objectives.front(), 2, config.max_len, config.seed);
    const Vocabulary vocab = build_vocabulary(store.episodes(), 1, config.include_automation_id);
    const TrainingSet data = build_training_set(store, std::span(config.objectives).first(1), config.process, vocab);

    NetworkShape shape = config.trainer.shape;
    shape.input_width = data.width;
    shape.action_types = data.action_types.size();
    const QNetwork net(shape, derive_seed(config.seed, 1));

    Rng rng(derive_seed(config.seed, 4));
    std::vector<QSample> batch;
    std::vector<double> targets;
    for (std::size_t k = 0; k < 16; ++k) {
        const auto& state = data.states[rng.uniform_index(data.states.size())];
        batch.push_back({&state.graph, state.slots[rng.uniform_index(state.slots.size())]});
        targets.push_back(rng.uniform(-1.0, 1.0));
    }
    const auto report = gradient_check(net, batch, targets, 1e-5, 1e-4, {64, derive_seed(config.seed, 5), {}});
    for (const auto& b : report.blocks) {
        log << std::setw(18) << std::left << b.name << std::right << " checked " << std::setw(3) << b.checked
            << "  max relative error " << std::scientific << std::setprecision(3) << b.max_relative_error
            << std::defaultfloat << '\n';
    }
    log << (report.passed ? "gradient check passed" : "gradient check FAILED") << '\n';
    return report.passed ? kExitOk : kExitPipelineError;
}

}  // namespace

int run(std::string_view command, const RunConfig& config, std::ostream& log) {
    config.validate();
    if (command == "gen-data") return gen_data(config, log);
    if (command == "train") return train_command(config, log);
    if (command == "eval") return eval_command(config, log);
    if (command == "sweep") return sweep_command(config, log);
    if (command == "xval") return xval_command(config, log);
    if (command == "oracle") return oracle_command(config, log);
    if (command == "gradcheck") return gradcheck_command(config, log);
    throw ConfigError("unknown command '" + std::string(command) + "'");
}

int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"Batch-RL GUI testing over a synthetic GUI simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file, app_name, eval_app, out, data, policy, checkpoint, qtable, vocab;
    std::vector<std::string> objectives;
    std::optional<std::size_t> episodes, max_len, jobs;
    std::optional<std::uint64_t> seed;
    std::optional<double> temperature;
    app.add_option("--config", config_file, "JSON run configuration");
    app.add_option("--app", app_name, "built-in app name or AppSpec file");
    app.add_option("--eval-app", eval_app, "app used for evaluation");
    app.add_option("--objective", objectives, "objective event, optionally event:count (repeatable)");
    app.add_option("--episodes", episodes, "episodes collected per objective");
    app.add_option("--max-len", max_len, "maximum episode length during collection");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out, "output file or directory");
    app.add_option("--data", data, "episode file");
    app.add_option("--policy", policy, "greedy, sampler, random or qhash");
    app.add_option("--temperature", temperature, "sampler temperature");
    app.add_option("--checkpoint", checkpoint, "network checkpoint");
    app.add_option("--qtable", qtable, "Q-hash table");
    app.add_option("--vocab", vocab, "vocabulary file (default <checkpoint>.vocab.json)");
    app.add_option("--jobs", jobs, "worker threads");
    for (const auto& name : cli_commands()) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        RunConfig config;
        if (!config_file.empty()) apply_config_file(config, config_file);
        apply_env_overrides(config, drift_environment());
        if (!app_name.empty()) config.app = app_name;
        if (!eval_app.empty()) config.eval_app = eval_app;
        if (!objectives.empty()) {
            config.objectives.clear();
            for (const auto& o : objectives) config.objectives.push_back(parse_objective(o));
        }
        if (episodes) config.episodes = *episodes;
        if (max_len) config.max_len = *max_len;
        if (seed) config.seed = *seed;
        if (!out.empty()) config.out = out;
        if (!data.empty()) config.data = data;
        if (!policy.empty()) config.policy.kind = parse_policy_kind(policy);
        if (temperature) config.policy.temperature = *temperature;
        if (!checkpoint.empty()) config.checkpoint = checkpoint;
        if (!qtable.empty()) config.qtable = qtable;
        if (!vocab.empty()) config.vocab = vocab;
        if (jobs) config.jobs = *jobs;
        return run(command, config, log);
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return kExitPipelineError;
    }
}

}  // namespace drift
