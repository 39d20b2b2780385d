#include "drift/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"

namespace drift {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::Sampler: return "sampler";
        case PolicyKind::Random: return "random";
        case PolicyKind::QHash: return "qhash";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view text) {
    if (text == "greedy") return PolicyKind::Greedy;
    if (text == "sampler") return PolicyKind::Sampler;
    if (text == "random") return PolicyKind::Random;
    if (text == "qhash") return PolicyKind::QHash;
    throw ConfigError("policy: unknown kind '" + std::string(text) + "' (greedy, sampler, random, qhash)");
}

void PolicySpec::validate() const {
    if (kind == PolicyKind::Sampler && !(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

std::size_t argmax_first(std::span<const double> values) {
    if (values.empty()) throw NoActions("argmax of an empty set");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return best;
}

std::vector<double> softmax(std::span<const double> values, double temperature) {
    if (values.empty()) throw NoActions("softmax of an empty set");
    if (std::isinf(temperature)) return std::vector<double>(values.size(), 1.0 / static_cast<double>(values.size()));
    const double top = *std::max_element(values.begin(), values.end());
    std::vector<double> p(values.size());
    double total = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        p[k] = std::exp((values[k] - top) / temperature);
        total += p[k];
    }
    for (double& v : p) v /= total;
    return p;
}

std::size_t sample_categorical(std::span<const double> probabilities, Rng& rng) {
    if (probabilities.empty()) throw NoActions("sampling from an empty set");
    const double u = rng.uniform01() * std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    double cumulative = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        cumulative += probabilities[k];
        if (u < cumulative) return k;
    }
    for (std::size_t k = probabilities.size(); k-- > 0;) {
        if (probabilities[k] > 0.0) return k;
    }
    return probabilities.size() - 1;
}

std::vector<double> action_values(const QNetwork& net, const EncodedState& state) {
    const Matrix q = net.forward(state.graph);
    std::vector<double> values;
    values.reserve(state.slots.size());
    for (const auto& s : state.slots) values.push_back(q(s.node, s.type));
    return values;
}

UIAction act_greedy(const QNetwork& net, const UITree& state, const Vocabulary& vocab,
                    std::span<const ActionType> types) {
    const auto encoded = encode_state(state, vocab, types);
    if (encoded.actions.empty()) throw NoActions("state has no actionable node");
    return encoded.actions[argmax_first(action_values(net, encoded))];
}

UIAction act_sampler(const QNetwork& net, const UITree& state, const Vocabulary& vocab, double temperature, Rng& rng,
                     std::span<const ActionType> types) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    const auto encoded = encode_state(state, vocab, types);
    if (encoded.actions.empty()) throw NoActions("state has no actionable node");
    return encoded.actions[sample_categorical(softmax(action_values(net, encoded), temperature), rng)];
}

UIAction act_random(const UITree& state, Rng& rng, std::span<const ActionType> types) {
    const auto actions = enumerate_actions(state, types);
    if (actions.empty()) throw NoActions("state has no actionable node");
    return actions[rng.uniform_index(actions.size())];
}

std::uint64_t QHashTable::key(std::uint64_t state_hash, const UIAction& action) {
    Fnv1a h;
    h.word(action.node.value);
    h.byte(static_cast<std::uint8_t>(action.type));
    return state_hash ^ mix64(h.value());
}

double QHashTable::value(std::uint64_t key) const {
    auto it = table_.find(key);
    return it == table_.end() ? 0.0 : it->second;
}

std::string QHashTable::to_json() const {
    std::map<std::string, double> sorted;
    for (const auto& [k, v] : table_) sorted[to_hex(k)] = v;
    nlohmann::ordered_json j;
    j["format"] = "drift-qhash/1";
    j["learning_rate"] = learning_rate;
    j["entries"] = sorted;
    return j.dump();
}

QHashTable QHashTable::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text.begin(), text.end());
        if (j.value("format", "") != "drift-qhash/1") throw IoError("unsupported Q-table format");
        QHashTable table;
        table.learning_rate = j.at("learning_rate").get<double>();
        for (const auto& [hex, v] : j.at("entries").items()) {
            std::uint64_t key = 0;
            if (!parse_hex(hex, key)) throw IoError("bad Q-table key '" + hex + "'");
            table.set(key, v.get<double>());
        }
        return table;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("Q-table: ") + e.what());
    }
}

void QHashTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json() << '\n';
}

QHashTable QHashTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

QHashTable qhash_fit(std::span<const Transition> data, const TrainerConfig& config, const QHashOptions& options,
                     std::span<const ActionType> types) {
    if (data.empty()) throw EmptyCorpus("no transitions to fit");
    struct Row {
        std::uint64_t key;
        double reward;
        bool done;
        std::vector<std::uint64_t> next_keys;
    };
    std::vector<Row> rows;
    rows.reserve(data.size());
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> next_cache;
    for (const auto& t : data) {
        Row row{QHashTable::key(t.state->canonical_hash(), t.action), t.reward, t.done, {}};
        if (!t.done) {
            const std::uint64_t h = t.next_state->canonical_hash();
            auto [it, inserted] = next_cache.try_emplace(h);
            if (inserted) {
                for (const auto& a : enumerate_actions(*t.next_state, types)) it->second.push_back(QHashTable::key(h, a));
            }
            row.next_keys = it->second;
        }
        rows.push_back(std::move(row));
    }

    QHashTable table;
    table.learning_rate = options.learning_rate;
    Rng rng(derive_seed(config.seed, 3));
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t k : order) {
            const Row& row = rows[k];
            double bootstrap = 0.0;
            if (!row.done && !row.next_keys.empty()) {
                bootstrap = -std::numeric_limits<double>::infinity();
                for (auto nk : row.next_keys) bootstrap = std::max(bootstrap, table.value(nk));
            }
            const double q = table.value(row.key);
            table.set(row.key, q + options.learning_rate * (row.reward + config.discount * bootstrap - q));
        }
    }
    return table;
}

UIAction qhash_act(const QHashTable& table, const UITree& state, std::span<const ActionType> types) {
    const auto actions = enumerate_actions(state, types);
    if (actions.empty()) throw NoActions("state has no actionable node");
    std::vector<double> values;
    values.reserve(actions.size());
    for (const auto& a : actions) values.push_back(table.value(QHashTable::key(state.canonical_hash(), a)));
    return actions[argmax_first(values)];
}

namespace {

class ProcessView {
public:
    explicit ProcessView(std::string process) : process_(std::move(process)) {}

    const UITree& view(const UITree& state) {
        if (process_.empty()) return state;
        auto [it, inserted] = cache_.try_emplace(state.canonical_hash());
        if (inserted) it->second = std::make_unique<UITree>(filter_process(state, process_));
        return *it->second;
    }

private:
    std::string process_;
    std::unordered_map<std::uint64_t, std::unique_ptr<UITree>> cache_;
};

class RandomAgent final : public Agent {
public:
    explicit RandomAgent(std::vector<ActionType> types) : types_(std::move(types)) {}
    UIAction act(const UITree& state, Rng& rng) override { return act_random(state, rng, types_); }
    bool strict() const override { return false; }

private:
    std::vector<ActionType> types_;
};

class NetworkAgent final : public Agent {
public:
    NetworkAgent(const PolicySpec& spec, const PolicyResources& r)
        : spec_(spec), net_(r.network), vocab_(r.vocab), types_(r.action_types), view_(r.process) {}

    UIAction act(const UITree& state, Rng& rng) override {
        auto [it, inserted] = cache_.try_emplace(state.canonical_hash());
        Entry& e = it->second;
        if (inserted) {
            auto encoded = encode_state(view_.view(state), *vocab_, types_);
            if (encoded.actions.empty()) throw NoActions("state has no actionable node");
            const auto values = action_values(*net_, encoded);
            e.actions = std::move(encoded.actions);
            e.greedy = argmax_first(values);
            if (spec_.kind == PolicyKind::Sampler) e.probabilities = softmax(values, spec_.temperature);
        }
        if (spec_.kind == PolicyKind::Greedy) return e.actions[e.greedy];
        return e.actions[sample_categorical(e.probabilities, rng)];
    }

private:
    struct Entry {
        std::vector<UIAction> actions;
        std::size_t greedy = 0;
        std::vector<double> probabilities;
    };

    PolicySpec spec_;
    std::shared_ptr<const QNetwork> net_;
    std::shared_ptr<const Vocabulary> vocab_;
    std::vector<ActionType> types_;
    ProcessView view_;
    std::unordered_map<std::uint64_t, Entry> cache_;
};

class QHashAgent final : public Agent {
public:
    explicit QHashAgent(const PolicyResources& r) : table_(r.table), types_(r.action_types), view_(r.process) {}

    UIAction act(const UITree& state, Rng&) override { return qhash_act(*table_, view_.view(state), types_); }

private:
    std::shared_ptr<const QHashTable> table_;
    std::vector<ActionType> types_;
    ProcessView view_;
};

}  // namespace

std::unique_ptr<Agent> make_agent(const PolicySpec& spec, const PolicyResources& resources) {
    spec.validate();
    switch (spec.kind) {
        case PolicyKind::Random:
            return std::make_unique<RandomAgent>(resources.action_types);
        case PolicyKind::QHash:
            if (!resources.table) throw ConfigError("qhash policy needs a Q-table");
            return std::make_unique<QHashAgent>(resources);
        case PolicyKind::Greedy:
        case PolicyKind::Sampler:
            if (!resources.network || !resources.vocab) throw ConfigError("network policy needs a checkpoint and vocabulary");
            if (spec.kind == PolicyKind::Sampler && std::isinf(spec.temperature)) {
                return std::make_unique<RandomAgent>(resources.action_types);
            }
            return std::make_unique<NetworkAgent>(spec, resources);
    }
    throw ConfigError("unknown policy kind");
}

}  // namespace drift
