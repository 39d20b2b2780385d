#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "drift/uitree.hpp"

namespace drift {

/// (screen, node identifier, action type): the key of transitions and events.
struct Trigger {
    std::string screen;
    NodeIdentifier node;
    ActionType type = ActionType::LeftClick;

    friend auto operator<=>(const Trigger&, const Trigger&) = default;
};

/// Declarative synthetic GUI application.
struct AppSpec {
    std::string name;
    std::map<std::string, TreePtr> screens;
    std::map<Trigger, std::string> transitions;  // → target screen id
    std::map<Trigger, std::string> events;       // → event name
    std::string initial_screen;
    std::optional<std::uint64_t> perturbation_seed;

    /// Distinct event names, sorted.
    std::vector<std::string> event_names() const;
    bool has_event(const std::string& name) const;

    /// Throws InvalidAppSpec when a transition target or the initial screen
    /// is missing, a screen has no actionable node, a trigger names a node
    /// absent from its screen, or a screen is unreachable.
    void validate() const;

    /// Outcome of acting on the template node `node` of `screen`: the next
    /// screen (unchanged for inert elements) and the fired event, if any.
    struct Effect {
        std::string next_screen;
        std::optional<std::string> event;
    };
    Effect effect(const std::string& screen, NodeIdentifier node, ActionType type) const;

    std::string to_json() const;
    static AppSpec from_json(std::string_view text);
};

AppSpec load_app_spec(const std::string& path);
void save_app_spec(const AppSpec& spec, const std::string& path);

/// Built-in applications: settings, browser and their *_perturbed variants.
std::vector<AppSpec> list_builtin_apps();
/// Built-in by name, otherwise an AppSpec file path. Throws InvalidAppSpec.
AppSpec resolve_app(const std::string& name_or_path);

struct Objective {
    std::string event_name;
    int target_count = 1;

    friend bool operator==(const Objective&, const Objective&) = default;
};

struct StepResult {
    TreePtr next_state;
    double reward = 0.0;
    bool done = false;
    std::vector<std::string> fired_events;
    bool stale = false;  // lenient no-op on an action whose node was absent
};

struct EnvOptions {
    /// Treat actions on absent nodes as no-ops instead of raising NodeNotInState.
    bool lenient = false;
};

/// Deterministic step/reset simulator over an AppSpec. Single-owner.
class Env {
public:
    explicit Env(AppSpec spec, EnvOptions options = {});

    /// Throws UnknownEvent when an objective names an event the app never fires.
    TreePtr reset(std::span<const Objective> objectives, std::uint64_t seed);
    TreePtr reset(const Objective& objective, std::uint64_t seed) { return reset(std::span(&objective, 1), seed); }

    /// Throws NotReset before the first reset or after done.
    StepResult step(const UIAction& action);

    const AppSpec& spec() const noexcept { return spec_; }
    const std::string& screen() const noexcept { return screen_; }
    TreePtr state() const { return state_; }
    bool done() const noexcept { return done_; }
    /// Objective event counts since the last reset, in objective order.
    std::span<const int> counts() const noexcept { return counts_; }

private:
    TreePtr render(const std::string& screen);

    AppSpec spec_;
    EnvOptions options_;
    std::vector<Objective> objectives_;
    std::vector<int> counts_;
    std::map<std::string, TreePtr> rendered_;
    std::string screen_;
    TreePtr state_;
    std::uint64_t episode_seed_ = 0;
    bool ready_ = false;
    bool done_ = false;
};

/// Replaces every present AutomationID with a value derived from `salt`.
/// Structure and the other properties are untouched.
UINode perturb_automation_ids(const UINode& node, std::uint64_t salt);

}  // namespace drift
