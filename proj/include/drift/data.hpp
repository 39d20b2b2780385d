#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drift/env.hpp"
#include "drift/featurize.hpp"
#include "drift/uitree.hpp"

namespace drift {

struct Transition {
    TreePtr state;
    UIAction action;
    double reward = 0.0;
    TreePtr next_state;
    bool done = false;
};

struct FiredEvent {
    std::size_t step = 0;  // index of the transition that fired it
    std::string name;

    friend bool operator==(const FiredEvent&, const FiredEvent&) = default;
};

struct Episode {
    std::vector<Transition> transitions;
    std::string app;
    std::uint64_t seed = 0;
    std::string policy = "random";
    std::vector<FiredEvent> events;
};

/// Append-only, insertion-ordered collection of episodes.
class EpisodeStore {
public:
    EpisodeStore() = default;
    EpisodeStore(std::string app, std::uint64_t seed, std::string policy)
        : app_(std::move(app)), seed_(seed), policy_(std::move(policy)) {}

    void append(Episode episode) { episodes_.push_back(std::move(episode)); }
    void append(const EpisodeStore& other);

    std::span<const Episode> episodes() const noexcept { return episodes_; }
    std::size_t size() const noexcept { return episodes_.size(); }
    bool empty() const noexcept { return episodes_.empty(); }
    const Episode& operator[](std::size_t i) const { return episodes_[i]; }
    auto begin() const { return episodes_.begin(); }
    auto end() const { return episodes_.end(); }

    const std::string& app() const noexcept { return app_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& policy() const noexcept { return policy_; }

    /// Line-delimited JSON: a header line, then one episode per line. Each
    /// episode embeds its distinct tree documents once and refers to them
    /// by position.
    void save(const std::string& path) const;
    static EpisodeStore load(const std::string& path);

private:
    std::vector<Episode> episodes_;
    std::string app_;
    std::uint64_t seed_ = 0;
    std::string policy_ = "random";
};

struct CollectOptions {
    std::size_t max_attempts = 10'000;
    /// Drop episodes that also fire any of these events (bias control).
    std::vector<std::string> exclude_events;
};

/// Runs the uniform-random agent until `count` episodes reach the
/// objective within `max_len` steps. Throws CollectionBudgetExceeded.
EpisodeStore collect_random_episodes(const AppSpec& spec, const Objective& objective, std::size_t count,
                                     std::size_t max_len, std::uint64_t seed, const CollectOptions& options = {});

bool episode_meets_objective(const Episode& episode, const Objective& objective);

/// Prefix ending at the transition where the target_count-th objective event
/// fires; that transition becomes terminal. Throws ObjectiveNotMet.
Episode crop_episode(const Episode& episode, const Objective& objective);

/// Reward assigned to each objective event so a task's episode return is 1.
inline double normalized_reward(const Objective& objective) { return 1.0 / objective.target_count; }

struct EncodedTransition {
    std::size_t state = 0;       // index into TrainingSet::states
    ActionSlot action;
    double reward = 0.0;
    std::size_t next_state = 0;  // index into TrainingSet::states
    bool done = false;
};

/// Vectorized transitions. Identical states are encoded once and shared.
struct TrainingSet {
    std::vector<EncodedState> states;
    std::vector<EncodedTransition> transitions;
    std::vector<ActionType> action_types;
    std::size_t width = 0;
};

/// Per objective: keeps qualifying episodes, crops them, restricts states to
/// `process` (empty = keep whole tree), vectorizes, and labels the event
/// transition with the normalized reward. Throws NoQualifyingEpisodes.
TrainingSet build_training_set(const EpisodeStore& store, std::span<const Objective> objectives,
                               const std::string& process, const Vocabulary& vocab,
                               std::span<const ActionType> action_types = default_action_types());

/// The raw (unvectorized) cropped, relabelled transitions of the same
/// procedure; consumed by the tabular baseline.
std::vector<Transition> prepare_transitions(const EpisodeStore& store, std::span<const Objective> objectives,
                                            const std::string& process);

/// Episode-level partition into k near-equal folds; pair i holds out fold i.
/// Throws TooFewEpisodes when k < 2 or the store has fewer than k episodes.
std::vector<std::pair<EpisodeStore, EpisodeStore>> k_fold_split(const EpisodeStore& store, std::size_t k,
                                                                std::uint64_t seed);

}  // namespace drift
