#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "drift/data.hpp"
#include "drift/featurize.hpp"
#include "drift/nn.hpp"
#include "drift/qlearn.hpp"
#include "drift/rng.hpp"

namespace drift {

enum class PolicyKind { Greedy, Sampler, Random, QHash };

std::string_view to_string(PolicyKind kind);
/// Throws ConfigError.
PolicyKind parse_policy_kind(std::string_view text);

struct PolicySpec {
    PolicyKind kind = PolicyKind::Greedy;
    double temperature = 1.0;  // sampler only; +inf samples uniformly
    std::uint64_t seed = 0;

    void validate() const;
};

/// Index of the first maximum.
std::size_t argmax_first(std::span<const double> values);
/// softmax(values / m) with max-subtraction; m = +inf gives the uniform distribution.
std::vector<double> softmax(std::span<const double> values, double temperature);
/// Inverse-CDF draw from a categorical distribution.
std::size_t sample_categorical(std::span<const double> probabilities, Rng& rng);

/// Q(s, a) for every enumerated action of `state`, in enumeration order.
std::vector<double> action_values(const QNetwork& net, const EncodedState& state);

/// Throw NoActions when the state has no enumerated action.
UIAction act_greedy(const QNetwork& net, const UITree& state, const Vocabulary& vocab,
                    std::span<const ActionType> types = default_action_types());
UIAction act_sampler(const QNetwork& net, const UITree& state, const Vocabulary& vocab, double temperature, Rng& rng,
                     std::span<const ActionType> types = default_action_types());
UIAction act_random(const UITree& state, Rng& rng, std::span<const ActionType> types = default_action_types());

/// Tabular Q-values keyed by a hash of (canonical state, action); unseen keys read 0.
class QHashTable {
public:
    static std::uint64_t key(std::uint64_t state_hash, const UIAction& action);

    double value(std::uint64_t key) const;
    void set(std::uint64_t key, double value) { table_[key] = value; }
    bool contains(std::uint64_t key) const { return table_.count(key) != 0; }
    std::size_t size() const noexcept { return table_.size(); }
    const std::unordered_map<std::uint64_t, double>& entries() const noexcept { return table_; }

    double learning_rate = 0.5;

    /// Structured text map of hex key → value.
    std::string to_json() const;
    static QHashTable from_json(std::string_view text);
    void save(const std::string& path) const;
    static QHashTable load(const std::string& path);

private:
    std::unordered_map<std::uint64_t, double> table_;
};

struct QHashOptions {
    double learning_rate = 0.5;
    std::size_t epochs = 50;
};

/// Epoch-shuffled tabular Q-learning over raw transitions, zero bootstrap at done.
QHashTable qhash_fit(std::span<const Transition> data, const TrainerConfig& config, const QHashOptions& options = {},
                     std::span<const ActionType> types = default_action_types());

/// Argmax of table lookups with the greedy tie-break. Throws NoActions.
UIAction qhash_act(const QHashTable& table, const UITree& state, std::span<const ActionType> types = default_action_types());

/// A policy bound to its resources. Instances are cheap and owned by one
/// evaluation thread; the snapshots they point to are shared read-only.
class Agent {
public:
    virtual ~Agent() = default;
    virtual UIAction act(const UITree& state, Rng& rng) = 0;
    /// Whether stale actions should raise instead of being skipped.
    virtual bool strict() const { return true; }
};

struct PolicyResources {
    std::shared_ptr<const QNetwork> network;
    std::shared_ptr<const Vocabulary> vocab;
    std::shared_ptr<const QHashTable> table;
    std::vector<ActionType> action_types{default_action_types().begin(), default_action_types().end()};
    /// Observed states are restricted to this process before featurization (empty = whole tree).
    std::string process;
};

/// Throws ConfigError when a resource the policy needs is missing.
std::unique_ptr<Agent> make_agent(const PolicySpec& spec, const PolicyResources& resources);

}  // namespace drift
