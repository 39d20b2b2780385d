#include "drift/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <Eigen/Dense>

#include "drift/errors.hpp"
#include "drift/hash.hpp"

namespace drift {

double EvalReport::mean_steps_per_reward() const {
    if (steps_per_reward.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double total = std::accumulate(steps_per_reward.begin(), steps_per_reward.end(), 0.0);
    return total / static_cast<double>(steps_per_reward.size());
}

EvalReport evaluate_policy(Agent& agent, const AppSpec& spec, std::span<const Objective> objectives,
                           std::size_t n_steps, std::uint64_t seed) {
    Env env(spec, EnvOptions{!agent.strict()});
    Rng rng(derive_seed(seed, 0));
    EvalReport report;
    report.seed = seed;
    report.steps = n_steps;
    report.objective_counts.assign(objectives.size(), 0);

    std::uint64_t episode = 0;
    TreePtr state = env.reset(objectives, derive_seed(seed, ++episode));
    std::unordered_set<std::uint64_t> seen{state->canonical_hash()};
    std::size_t since_reward = 0;
    for (std::size_t step = 0; step < n_steps; ++step) {
        if (env.done()) {
            state = env.reset(objectives, derive_seed(seed, ++episode));
            seen.insert(state->canonical_hash());
        }
        const StepResult result = env.step(agent.act(*state, rng));
        ++since_reward;
        for (const auto& event : result.fired_events) {
            for (std::size_t k = 0; k < objectives.size(); ++k) {
                if (objectives[k].event_name == event) ++report.objective_counts[k];
            }
        }
        if (result.reward > 0.0) {
            report.steps_per_reward.push_back(since_reward);
            since_reward = 0;
        }
        state = result.next_state;
        seen.insert(state->canonical_hash());
    }
    for (std::size_t k = 0; k < objectives.size(); ++k) {
        report.total_reward += report.objective_counts[k] * normalized_reward(objectives[k]);
    }
    report.unique_states = seen.size();
    return report;
}

Stat mean_sd(std::span<const double> values) {
    Stat s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return s;
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeMismatch("spearman: sequences differ in length");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = mean_sd(rx).mean, my = mean_sd(ry).mean;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

SweepRow aggregate(double temperature, std::span<const EvalReport> reports, std::span<const Objective> objectives) {
    SweepRow row;
    row.temperature = temperature;
    std::vector<double> reward, unique;
    for (const auto& r : reports) {
        reward.push_back(r.total_reward);
        unique.push_back(static_cast<double>(r.unique_states));
    }
    row.reward = mean_sd(reward);
    row.unique_states = mean_sd(unique);
    for (std::size_t k = 0; k < objectives.size(); ++k) {
        std::vector<double> v;
        for (const auto& r : reports) v.push_back(r.objective_counts[k] * normalized_reward(objectives[k]));
        row.per_objective.push_back(mean_sd(v));
    }
    return row;
}

}  // namespace

std::vector<SweepRow> temperature_sweep(std::span<const PolicyResources> networks, const AppSpec& spec,
                                        std::span<const Objective> objectives, std::span<const double> temperatures,
                                        const SweepOptions& options) {
    if (networks.empty()) throw ConfigError("temperature sweep needs at least one network");
    const std::size_t cells = temperatures.size() * networks.size();
    std::vector<EvalReport> reports(cells);
    parallel_for(cells, options.jobs, [&](std::size_t c) {
        const std::size_t t = c / networks.size(), k = c % networks.size();
        auto agent = make_agent(PolicySpec{PolicyKind::Sampler, temperatures[t], 0}, networks[k]);
        reports[c] = evaluate_policy(*agent, spec, objectives, options.n_steps, derive_seed(options.seed, k));
    });
    std::vector<SweepRow> rows;
    for (std::size_t t = 0; t < temperatures.size(); ++t) {
        rows.push_back(aggregate(temperatures[t], std::span(reports).subspan(t * networks.size(), networks.size()),
                                 objectives));
    }
    return rows;
}

std::vector<SweepRow> multi_task_eval(std::span<const PolicyResources> networks, const AppSpec& spec,
                                      std::span<const Objective> objectives, std::span<const double> temperatures,
                                      const SweepOptions& options) {
    if (objectives.size() < 2) throw ConfigError("multi-task evaluation needs two or more objectives");
    return temperature_sweep(networks, spec, objectives, temperatures, options);
}

SweepRow random_baseline(const AppSpec& spec, std::span<const Objective> objectives, std::size_t runs,
                         const SweepOptions& options, std::span<const ActionType> types) {
    std::vector<EvalReport> reports(runs);
    PolicyResources r;
    r.action_types.assign(types.begin(), types.end());
    parallel_for(runs, options.jobs, [&](std::size_t k) {
        auto agent = make_agent(PolicySpec{PolicyKind::Random, 1.0, 0}, r);
        reports[k] = evaluate_policy(*agent, spec, objectives, options.n_steps, derive_seed(options.seed, k));
    });
    return aggregate(std::numeric_limits<double>::infinity(), reports, objectives);
}

std::vector<std::size_t> random_steps_to_objective(const AppSpec& spec, const Objective& objective,
                                                   std::size_t episodes, std::uint64_t seed, std::size_t step_limit,
                                                   std::span<const ActionType> types) {
    Env env(spec, EnvOptions{true});
    Rng rng(derive_seed(seed, 0));
    std::vector<std::size_t> out;
    out.reserve(episodes);
    for (std::size_t e = 0; e < episodes; ++e) {
        TreePtr state = env.reset(objective, derive_seed(seed, e + 1));
        std::size_t steps = 0;
        while (!env.done()) {
            if (++steps > step_limit) {
                throw UnreachableObjective("random agent did not reach '" + objective.event_name + "' within " +
                                           std::to_string(step_limit) + " steps");
            }
            state = env.step(act_random(*state, rng, types)).next_state;
        }
        out.push_back(steps);
    }
    return out;
}

double expected_hitting_time(const AppSpec& spec, const Objective& objective, std::span<const ActionType> types) {
    if (!spec.has_event(objective.event_name)) throw UnknownEvent(spec.name + " never fires '" + objective.event_name + "'");
    const int target = objective.target_count;
    if (target < 1) throw UnknownEvent("target_count must be positive");

    // Chain states are (screen, objective events so far); index -1 is absorption.
    struct Edge {
        int to;
        double p;
    };
    std::map<std::pair<std::string, int>, int> index;
    std::vector<std::pair<std::string, int>> states;
    std::vector<std::vector<Edge>> edges;
    std::deque<int> queue;
    auto intern = [&](const std::string& screen, int count) {
        auto [it, inserted] = index.try_emplace({screen, count}, static_cast<int>(states.size()));
        if (inserted) {
            states.emplace_back(screen, count);
            edges.emplace_back();
            queue.push_back(it->second);
        }
        return it->second;
    };
    intern(spec.initial_screen, 0);
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        const auto [screen, count] = states[static_cast<std::size_t>(s)];
        const auto& tree = *spec.screens.at(screen);
        const auto actions = enumerate_actions(tree, types);
        const double p = 1.0 / static_cast<double>(actions.size());
        std::map<int, double> out;
        for (const auto& a : actions) {
            const auto effect = spec.effect(screen, a.node, a.type);
            int next_count = count;
            if (effect.event && *effect.event == objective.event_name) ++next_count;
            out[next_count >= target ? -1 : intern(effect.next_screen, next_count)] += p;
        }
        for (const auto& [to, mass] : out) edges[static_cast<std::size_t>(s)].push_back({to, mass});
    }

    // Every reachable state must reach absorption, otherwise the expectation diverges.
    const std::size_t n = states.size();
    std::vector<std::vector<int>> reverse(n);
    std::vector<bool> reaches(n, false);
    std::deque<int> frontier;
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& e : edges[s]) {
            if (e.to < 0) {
                if (!reaches[s]) frontier.push_back(static_cast<int>(s));
                reaches[s] = true;
            } else {
                reverse[static_cast<std::size_t>(e.to)].push_back(static_cast<int>(s));
            }
        }
    }
    while (!frontier.empty()) {
        const int s = frontier.front();
        frontier.pop_front();
        for (int pred : reverse[static_cast<std::size_t>(s)]) {
            if (!reaches[static_cast<std::size_t>(pred)]) {
                reaches[static_cast<std::size_t>(pred)] = true;
                frontier.push_back(pred);
            }
        }
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (!reaches[s]) {
            throw UnreachableObjective("'" + objective.event_name + "' cannot be completed from screen '" +
                                       states[s].first + "'");
        }
    }

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& e : edges[s]) {
            if (e.to >= 0) a(static_cast<Eigen::Index>(s), e.to) -= e.p;
        }
    }
    const Eigen::VectorXd h = a.partialPivLu().solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
    return h(0);
}

std::vector<std::size_t> MdpSolution::optimal_actions(const std::string& screen, double tolerance) const {
    const auto& values = q.at(screen);
    const double best = *std::max_element(values.begin(), values.end());
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] >= best - tolerance) out.push_back(k);
    }
    return out;
}

MdpSolution value_iteration(const AppSpec& spec, const Objective& objective, double discount,
                            std::span<const ActionType> types, double tolerance) {
    if (!spec.has_event(objective.event_name)) throw UnknownEvent(spec.name + " never fires '" + objective.event_name + "'");
    if (objective.target_count != 1) throw ConfigError("value iteration supports single-event objectives only");
    struct Outcome {
        double reward;
        bool done;
        std::string next;
    };
    MdpSolution sol;
    std::map<std::string, std::vector<Outcome>> outcomes;
    for (const auto& [screen, tree] : spec.screens) {
        sol.actions[screen] = enumerate_actions(*tree, types);
        auto& out = outcomes[screen];
        for (const auto& a : sol.actions[screen]) {
            const auto effect = spec.effect(screen, a.node, a.type);
            const bool fires = effect.event && *effect.event == objective.event_name;
            out.push_back({fires ? 1.0 : 0.0, fires, effect.next_screen});
        }
        sol.value[screen] = 0.0;
        sol.q[screen].assign(out.size(), 0.0);
    }
    for (int iteration = 0; iteration < 100000; ++iteration) {
        double change = 0.0;
        for (const auto& [screen, out] : outcomes) {
            auto& q = sol.q[screen];
            for (std::size_t k = 0; k < out.size(); ++k) {
                q[k] = out[k].reward + (out[k].done ? 0.0 : discount * sol.value[out[k].next]);
            }
        }
        for (auto& [screen, v] : sol.value) {
            const auto& q = sol.q[screen];
            const double best = q.empty() ? 0.0 : *std::max_element(q.begin(), q.end());
            change = std::max(change, std::abs(best - v));
            v = best;
        }
        if (change < tolerance) break;
    }
    return sol;
}

std::vector<std::string> optimal_path(const AppSpec& spec, const Objective& objective, const MdpSolution& solution) {
    std::vector<std::string> path;
    std::string screen = spec.initial_screen;
    for (std::size_t guard = 0; guard <= spec.screens.size(); ++guard) {
        const auto best = solution.optimal_actions(screen);
        const auto& action = solution.actions.at(screen)[best.front()];
        path.push_back(screen);
        const auto effect = spec.effect(screen, action.node, action.type);
        if (effect.event && *effect.event == objective.event_name) return path;
        screen = effect.next_screen;
    }
    throw UnreachableObjective("greedy optimal walk never fires '" + objective.event_name + "'");
}

CrossValidationResult cross_validate(const EpisodeStore& store, std::span<const Objective> objectives,
                                     const AppSpec& eval_spec, const CrossValidationConfig& config) {
    if (config.seeds.empty()) throw ConfigError("cross-validation needs at least one seed");
    config.trainer.validate();
    const auto splits = k_fold_split(store, config.folds, derive_seed(config.trainer.seed, 7));

    struct FoldData {
        std::shared_ptr<const Vocabulary> vocab;
        TrainingSet data;
    };
    std::vector<FoldData> folds;
    for (const auto& [train_part, held_out] : splits) {
        auto vocab = std::make_shared<const Vocabulary>(
            build_vocabulary(train_part.episodes(), config.min_count, config.include_automation_id));
        folds.push_back({vocab, build_training_set(train_part, objectives, config.process, *vocab, config.action_types)});
    }

    CrossValidationResult result;
    const std::size_t n_seeds = config.seeds.size();
    result.runs.resize(folds.size() * n_seeds);
    parallel_for(result.runs.size(), config.jobs, [&](std::size_t c) {
        const std::size_t f = c / n_seeds;
        const std::uint64_t seed = config.seeds[c % n_seeds];
        const std::uint64_t eval_seed = derive_seed(seed, f + 1);
        PolicyResources resources;
        resources.vocab = folds[f].vocab;
        resources.action_types = config.action_types;
        resources.process = config.process;
        auto greedy_eval = [&](std::shared_ptr<const QNetwork> net) {
            resources.network = std::move(net);
            auto agent = make_agent(PolicySpec{PolicyKind::Greedy, 1.0, 0}, resources);
            return evaluate_policy(*agent, eval_spec, objectives, config.eval_steps, eval_seed);
        };

        TrainerConfig tc = config.trainer;
        tc.seed = seed;
        EvalHook hook;
        if (config.learning_curve && tc.eval_every > 0) {
            hook = [&](const QNetwork& net, long step) {
                const auto report = greedy_eval(std::make_shared<const QNetwork>(net));
                return EvalPoint{step, report.total_reward, report.unique_states};
            };
        }
        auto trained = train(folds[f].data, tc, hook);
        trained.network.vocab_fingerprint = folds[f].vocab->fingerprint();
        auto& run = result.runs[c];
        run.fold = f;
        run.seed = seed;
        run.curve = std::move(trained.evals);
        run.policy = resources;
        run.policy.network = std::make_shared<const QNetwork>(std::move(trained.network));
        run.report = greedy_eval(run.policy.network);
        run.report.fold = static_cast<int>(f);
    });

    if (!result.runs.empty() && !result.runs.front().curve.empty()) {
        for (std::size_t p = 0; p < result.runs.front().curve.size(); ++p) {
            std::vector<double> reward, unique;
            for (const auto& run : result.runs) {
                reward.push_back(run.curve[p].reward);
                unique.push_back(static_cast<double>(run.curve[p].unique_states));
            }
            result.curve.push_back({result.runs.front().curve[p].step, mean_sd(reward), mean_sd(unique)});
        }
    }
    std::vector<double> spr;
    for (const auto& run : result.runs) {
        const double m = run.report.mean_steps_per_reward();
        if (std::isnan(m)) ++result.failed_runs;
        spr.push_back(m);
    }
    result.steps_per_reward = mean_sd(spr);
    return result;
}

std::string camel_case(std::string_view event_name) {
    std::string out;
    bool upper = true;
    for (char c : event_name) {
        if (c == '_' || c == '-' || c == ' ') {
            upper = true;
            continue;
        }
        out.push_back(upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
        upper = false;
    }
    return out;
}

namespace {

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& fingerprint, const std::string& header) : out_(path) {
        if (!out_) throw IoError("cannot write " + path);
        out_ << "# config=" << fingerprint << '\n' << header << '\n';
    }

    void row(std::initializer_list<std::string> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }

    std::ofstream& stream() { return out_; }

private:
    std::ofstream out_;
};

}  // namespace

void write_single_task_csv(const CrossValidationResult& result, const std::string& path, const std::string& fingerprint) {
    CsvFile csv(path, fingerprint, "x,y,err");
    for (const auto& p : result.curve) csv.row({std::to_string(p.step), num(p.reward.mean), num(p.reward.sd)});
}

void write_single_task_random_csv(std::span<const CurvePoint> curve, const SweepRow& random, const std::string& path,
                                  const std::string& fingerprint) {
    CsvFile csv(path, fingerprint, "a,b");
    for (const auto& p : curve) csv.row({std::to_string(p.step), num(random.reward.mean)});
}

void write_temperature_csv(std::span<const SweepRow> rows, const std::string& path, const std::string& fingerprint) {
    CsvFile csv(path, fingerprint, "x,y,err");
    for (const auto& r : rows) csv.row({num(r.temperature), num(r.reward.mean), num(r.reward.sd)});
}

void write_pages_seen_csv(std::span<const SweepRow> rows, const std::string& path, const std::string& fingerprint) {
    CsvFile csv(path, fingerprint, "x,y,std");
    for (const auto& r : rows) csv.row({num(r.temperature), num(r.unique_states.mean), num(r.unique_states.sd)});
}

void write_temperature_random_csv(std::span<const SweepRow> rows, const SweepRow& random, const std::string& path,
                                  const std::string& fingerprint) {
    CsvFile csv(path, fingerprint, "a,b,std");
    for (const auto& r : rows) csv.row({num(r.temperature), num(random.reward.mean), num(random.reward.sd)});
}

void write_random_pages_seen_csv(std::span<const SweepRow> rows, const SweepRow& random, const std::string& path,
                                 const std::string& fingerprint) {
    CsvFile csv(path, fingerprint, "x,y,std");
    for (const auto& r : rows) {
        csv.row({num(r.temperature), num(random.unique_states.mean), num(random.unique_states.sd)});
    }
}

void write_multiple_rewards_csv(std::span<const SweepRow> rows, std::span<const Objective> objectives,
                                const std::string& path, const std::string& fingerprint) {
    std::string header = "temperature,TotalMean,TotalStd";
    for (const auto& o : objectives) {
        const auto name = camel_case(o.event_name);
        header += "," + name + "Mean," + name + "Std";
    }
    CsvFile csv(path, fingerprint, header);
    for (const auto& r : rows) {
        auto& out = csv.stream();
        out << num(r.temperature) << ',' << num(r.reward.mean) << ',' << num(r.reward.sd);
        for (const auto& s : r.per_objective) out << ',' << num(s.mean) << ',' << num(s.sd);
        out << '\n';
    }
}

}  // namespace drift
