#include "drift/data.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"
#include "drift/rng.hpp"

namespace drift {

void EpisodeStore::append(const EpisodeStore& other) {
    if (episodes_.empty() && app_.empty()) {
        app_ = other.app_;
        seed_ = other.seed_;
        policy_ = other.policy_;
    }
    episodes_.insert(episodes_.end(), other.episodes_.begin(), other.episodes_.end());
}

namespace {

nlohmann::json episode_to_json(const Episode& ep) {
    nlohmann::ordered_json j;
    j["app"] = ep.app;
    j["seed"] = ep.seed;
    j["policy"] = ep.policy;
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : ep.events) events.push_back({e.step, e.name});
    j["events"] = std::move(events);

    std::unordered_map<std::uint64_t, std::size_t> index;
    auto trees = nlohmann::ordered_json::array();
    auto path = nlohmann::ordered_json::array();
    auto intern = [&](const UITree& tree) {
        auto [it, inserted] = index.try_emplace(tree.canonical_hash(), index.size());
        if (inserted) trees.push_back(nlohmann::ordered_json::parse(serialize_tree(tree)));
        path.push_back(it->second);
    };
    auto actions = nlohmann::ordered_json::array();
    auto rewards = nlohmann::ordered_json::array();
    auto done = nlohmann::ordered_json::array();
    for (const auto& t : ep.transitions) {
        intern(*t.state);
        actions.push_back({t.action.node.hex(), std::string(to_string(t.action.type))});
        rewards.push_back(t.reward);
        done.push_back(t.done);
    }
    if (!ep.transitions.empty()) intern(*ep.transitions.back().next_state);
    j["trees"] = std::move(trees);
    j["path"] = std::move(path);
    j["actions"] = std::move(actions);
    j["rewards"] = std::move(rewards);
    j["done"] = std::move(done);
    return j;
}

Episode episode_from_json(const nlohmann::json& j) {
    Episode ep;
    ep.app = j.at("app").get<std::string>();
    ep.seed = j.at("seed").get<std::uint64_t>();
    ep.policy = j.at("policy").get<std::string>();
    for (const auto& e : j.at("events")) ep.events.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::string>()});
    std::vector<TreePtr> trees;
    for (const auto& doc : j.at("trees")) trees.push_back(make_tree(parse_node(doc.dump())));
    const auto& path = j.at("path");
    const auto& actions = j.at("actions");
    const auto& rewards = j.at("rewards");
    const auto& done = j.at("done");
    if (actions.size() != rewards.size() || actions.size() != done.size() ||
        (!actions.empty() && path.size() != actions.size() + 1)) {
        throw IoError("episode arrays have inconsistent lengths");
    }
    for (std::size_t k = 0; k < actions.size(); ++k) {
        Transition t;
        t.state = trees.at(path[k].get<std::size_t>());
        t.next_state = trees.at(path[k + 1].get<std::size_t>());
        if (!parse_hex(actions[k].at(0).get<std::string>(), t.action.node.value)) throw IoError("bad node identifier");
        auto type = parse_action_type(actions[k].at(1).get<std::string>());
        if (!type) throw IoError("unknown action type");
        t.action.type = *type;
        t.reward = rewards[k].get<double>();
        t.done = done[k].get<bool>();
        ep.transitions.push_back(std::move(t));
    }
    return ep;
}

}  // namespace

void EpisodeStore::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    nlohmann::ordered_json header;
    header["format"] = "drift-episodes/1";
    header["app"] = app_;
    header["seed"] = seed_;
    header["policy"] = policy_;
    header["episodes"] = episodes_.size();
    out << header.dump() << '\n';
    for (const auto& ep : episodes_) out << episode_to_json(ep).dump() << '\n';
}

EpisodeStore EpisodeStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    try {
        if (!std::getline(in, line)) throw IoError(path + ": empty episode file");
        auto header = nlohmann::json::parse(line);
        if (header.value("format", "") != "drift-episodes/1") throw IoError(path + ": unsupported episode format");
        EpisodeStore store(header.at("app").get<std::string>(), header.at("seed").get<std::uint64_t>(),
                           header.at("policy").get<std::string>());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            store.append(episode_from_json(nlohmann::json::parse(line)));
        }
        return store;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

EpisodeStore collect_random_episodes(const AppSpec& spec, const Objective& objective, std::size_t count,
                                     std::size_t max_len, std::uint64_t seed, const CollectOptions& options) {
    Env env(spec);
    EpisodeStore store(spec.name, seed, "random");
    for (std::size_t attempt = 0; store.size() < count; ++attempt) {
        if (attempt >= options.max_attempts) {
            throw CollectionBudgetExceeded("only " + std::to_string(store.size()) + " of " + std::to_string(count) +
                                           " episodes reached '" + objective.event_name + "' after " +
                                           std::to_string(attempt) + " attempts");
        }
        Episode ep;
        ep.app = spec.name;
        ep.seed = derive_seed(seed, attempt);
        Rng rng(derive_seed(ep.seed, 1));
        TreePtr state = env.reset(objective, ep.seed);
        for (std::size_t step = 0; step < max_len && !env.done(); ++step) {
            const auto actions = enumerate_actions(*state);
            if (actions.empty()) break;
            const UIAction action = actions[rng.uniform_index(actions.size())];
            StepResult r = env.step(action);
            for (auto& name : r.fired_events) ep.events.push_back({step, std::move(name)});
            ep.transitions.push_back({state, action, r.reward, r.next_state, r.done});
            state = r.next_state;
        }
        if (!episode_meets_objective(ep, objective)) continue;
        const bool excluded = std::any_of(ep.events.begin(), ep.events.end(), [&](const FiredEvent& e) {
            return std::find(options.exclude_events.begin(), options.exclude_events.end(), e.name) !=
                   options.exclude_events.end();
        });
        if (!excluded) store.append(std::move(ep));
    }
    return store;
}

bool episode_meets_objective(const Episode& episode, const Objective& objective) {
    const auto n = std::count_if(episode.events.begin(), episode.events.end(),
                                 [&](const FiredEvent& e) { return e.name == objective.event_name; });
    return n >= objective.target_count;
}

Episode crop_episode(const Episode& episode, const Objective& objective) {
    int seen = 0;
    for (const auto& e : episode.events) {
        if (e.name != objective.event_name || ++seen < objective.target_count) continue;
        Episode out;
        out.app = episode.app;
        out.seed = episode.seed;
        out.policy = episode.policy;
        out.transitions.assign(episode.transitions.begin(),
                               episode.transitions.begin() + static_cast<std::ptrdiff_t>(e.step + 1));
        out.transitions.back().done = true;
        std::copy_if(episode.events.begin(), episode.events.end(), std::back_inserter(out.events),
                     [&](const FiredEvent& f) { return f.step <= e.step; });
        return out;
    }
    throw ObjectiveNotMet("episode fires '" + objective.event_name + "' " + std::to_string(seen) + " of " +
                          std::to_string(objective.target_count) + " times");
}

std::vector<Transition> prepare_transitions(const EpisodeStore& store, std::span<const Objective> objectives,
                                            const std::string& process) {
    std::unordered_map<std::uint64_t, TreePtr> filtered;
    auto restrict = [&](const TreePtr& tree) -> TreePtr {
        if (process.empty()) return tree;
        auto [it, inserted] = filtered.try_emplace(tree->canonical_hash());
        if (inserted) it->second = std::make_shared<const UITree>(filter_process(*tree, process));
        return it->second;
    };

    std::vector<Transition> out;
    for (const auto& objective : objectives) {
        std::size_t qualifying = 0;
        for (const auto& episode : store) {
            if (!episode_meets_objective(episode, objective)) continue;
            ++qualifying;
            const Episode cropped = crop_episode(episode, objective);
            std::vector<int> event_counts(cropped.transitions.size(), 0);
            for (const auto& e : cropped.events) {
                if (e.name == objective.event_name) ++event_counts[e.step];
            }
            for (std::size_t k = 0; k < cropped.transitions.size(); ++k) {
                const auto& t = cropped.transitions[k];
                out.push_back({restrict(t.state), t.action, event_counts[k] * normalized_reward(objective),
                               restrict(t.next_state), t.done});
            }
        }
        if (qualifying == 0) throw NoQualifyingEpisodes("no episode reaches '" + objective.event_name + "'");
    }
    return out;
}

TrainingSet build_training_set(const EpisodeStore& store, std::span<const Objective> objectives,
                               const std::string& process, const Vocabulary& vocab,
                               std::span<const ActionType> action_types) {
    TrainingSet set;
    set.action_types.assign(action_types.begin(), action_types.end());
    set.width = vocab.width();
    std::unordered_map<std::uint64_t, std::size_t> index;
    auto encode = [&](const UITree& tree) {
        auto [it, inserted] = index.try_emplace(tree.canonical_hash(), set.states.size());
        if (inserted) set.states.push_back(encode_state(tree, vocab, action_types));
        return it->second;
    };
    for (const auto& t : prepare_transitions(store, objectives, process)) {
        EncodedTransition e;
        e.state = encode(*t.state);
        const auto node = t.state->find(t.action.node);
        if (!node) throw NodeNotInState("action node " + t.action.node.hex() + " was filtered out of its state");
        const auto type_it = std::find(action_types.begin(), action_types.end(), t.action.type);
        if (type_it == action_types.end()) throw ShapeMismatch("unregistered action type in data");
        e.action = {*node, static_cast<std::size_t>(type_it - action_types.begin())};
        e.reward = t.reward;
        e.next_state = encode(*t.next_state);
        e.done = t.done;
        set.transitions.push_back(e);
    }
    return set;
}

std::vector<std::pair<EpisodeStore, EpisodeStore>> k_fold_split(const EpisodeStore& store, std::size_t k,
                                                                std::uint64_t seed) {
    if (k < 2) throw TooFewEpisodes("k-fold split needs k >= 2");
    if (store.size() < k) {
        throw TooFewEpisodes(std::to_string(store.size()) + " episodes cannot fill " + std::to_string(k) + " folds");
    }
    std::vector<std::size_t> order(store.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span(order));

    std::vector<std::size_t> fold_of(store.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) fold_of[order[pos]] = pos * k / order.size();

    std::vector<std::pair<EpisodeStore, EpisodeStore>> out;
    for (std::size_t f = 0; f < k; ++f) {
        EpisodeStore train(store.app(), store.seed(), store.policy());
        EpisodeStore held(store.app(), store.seed(), store.policy());
        for (std::size_t i = 0; i < store.size(); ++i) (fold_of[i] == f ? held : train).append(store[i]);
        out.emplace_back(std::move(train), std::move(held));
    }
    return out;
}

}  // namespace drift
