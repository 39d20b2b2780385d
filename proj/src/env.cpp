#include "drift/env.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"

namespace drift {

std::vector<std::string> AppSpec::event_names() const {
    std::set<std::string> names;
    for (const auto& [key, name] : events) names.insert(name);
    return {names.begin(), names.end()};
}

bool AppSpec::has_event(const std::string& name) const {
    return std::any_of(events.begin(), events.end(), [&](const auto& kv) { return kv.second == name; });
}

void AppSpec::validate() const {
    auto screen_tree = [&](const std::string& id) -> const UITree& {
        auto it = screens.find(id);
        if (it == screens.end() || !it->second) throw InvalidAppSpec(name + ": unknown screen '" + id + "'");
        return *it->second;
    };
    screen_tree(initial_screen);
    for (const auto& [id, tree] : screens) {
        if (!tree) throw InvalidAppSpec(name + ": screen '" + id + "' has no tree");
        if (actionable_nodes(*tree).empty()) throw InvalidAppSpec(name + ": screen '" + id + "' is a dead end");
    }
    auto check_trigger = [&](const Trigger& t) {
        if (!screen_tree(t.screen).find(t.node)) {
            throw InvalidAppSpec(name + ": trigger node " + t.node.hex() + " absent from screen '" + t.screen + "'");
        }
    };
    for (const auto& [t, target] : transitions) {
        check_trigger(t);
        screen_tree(target);
    }
    for (const auto& [t, event] : events) check_trigger(t);

    std::set<std::string> seen{initial_screen};
    std::deque<std::string> queue{initial_screen};
    while (!queue.empty()) {
        const std::string current = queue.front();
        queue.pop_front();
        for (auto it = transitions.lower_bound(Trigger{current, {0}, ActionType::LeftClick});
             it != transitions.end() && it->first.screen == current; ++it) {
            if (seen.insert(it->second).second) queue.push_back(it->second);
        }
    }
    for (const auto& [id, tree] : screens) {
        if (!seen.contains(id)) throw InvalidAppSpec(name + ": screen '" + id + "' is unreachable");
    }
}

AppSpec::Effect AppSpec::effect(const std::string& screen, NodeIdentifier node, ActionType type) const {
    const Trigger key{screen, node, type};
    Effect out{screen, std::nullopt};
    if (auto it = transitions.find(key); it != transitions.end()) out.next_screen = it->second;
    if (auto it = events.find(key); it != events.end()) out.event = it->second;
    return out;
}

namespace {

nlohmann::ordered_json trigger_json(const Trigger& t) {
    nlohmann::ordered_json j;
    j["screen"] = t.screen;
    j["node"] = t.node.hex();
    j["action"] = std::string(to_string(t.type));
    return j;
}

Trigger trigger_from_json(const nlohmann::json& j) {
    Trigger t;
    t.screen = j.at("screen").get<std::string>();
    if (!parse_hex(j.at("node").get<std::string>(), t.node.value)) throw InvalidAppSpec("bad node identifier");
    auto type = parse_action_type(j.at("action").get<std::string>());
    if (!type) throw InvalidAppSpec("unknown action type " + j.at("action").get<std::string>());
    t.type = *type;
    return t;
}

}  // namespace

std::string AppSpec::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "drift-app/1";
    j["name"] = name;
    j["initial_screen"] = initial_screen;
    if (perturbation_seed) j["perturbation_seed"] = *perturbation_seed;
    nlohmann::ordered_json sj = nlohmann::ordered_json::object();
    for (const auto& [id, tree] : screens) sj[id] = nlohmann::ordered_json::parse(serialize_tree(*tree));
    j["screens"] = std::move(sj);
    auto tj = nlohmann::ordered_json::array();
    for (const auto& [t, target] : transitions) {
        auto e = trigger_json(t);
        e["target"] = target;
        tj.push_back(std::move(e));
    }
    j["transitions"] = std::move(tj);
    auto ej = nlohmann::ordered_json::array();
    for (const auto& [t, event] : events) {
        auto e = trigger_json(t);
        e["event"] = event;
        ej.push_back(std::move(e));
    }
    j["events"] = std::move(ej);
    return j.dump(1);
}

AppSpec AppSpec::from_json(std::string_view text) {
    AppSpec spec;
    try {
        auto j = nlohmann::json::parse(text.begin(), text.end());
        if (j.value("format", "") != "drift-app/1") throw InvalidAppSpec("unsupported app format");
        spec.name = j.at("name").get<std::string>();
        spec.initial_screen = j.at("initial_screen").get<std::string>();
        if (j.contains("perturbation_seed")) spec.perturbation_seed = j.at("perturbation_seed").get<std::uint64_t>();
        for (const auto& [id, doc] : j.at("screens").items()) spec.screens[id] = make_tree(parse_node(doc.dump()));
        for (const auto& e : j.at("transitions")) spec.transitions[trigger_from_json(e)] = e.at("target").get<std::string>();
        for (const auto& e : j.at("events")) spec.events[trigger_from_json(e)] = e.at("event").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidAppSpec(e.what());
    }
    spec.validate();
    return spec;
}

AppSpec load_app_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidAppSpec("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return AppSpec::from_json(ss.str());
}

void save_app_spec(const AppSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << spec.to_json() << '\n';
}

AppSpec resolve_app(const std::string& name_or_path) {
    for (auto& spec : list_builtin_apps()) {
        if (spec.name == name_or_path) return spec;
    }
    if (std::filesystem::exists(name_or_path)) return load_app_spec(name_or_path);
    throw InvalidAppSpec("no built-in app or file named '" + name_or_path + "'");
}

UINode perturb_automation_ids(const UINode& node, std::uint64_t salt) {
    UINode out{node.props, {}};
    if (out.props.automation_id) {
        out.props.automation_id = to_hex(derive_seed(salt, fnv1a(*out.props.automation_id)));
    }
    out.children.reserve(node.children.size());
    for (const auto& child : node.children) out.children.push_back(perturb_automation_ids(child, salt));
    return out;
}

Env::Env(AppSpec spec, EnvOptions options) : spec_(std::move(spec)), options_(options) { spec_.validate(); }

TreePtr Env::render(const std::string& screen) {
    const TreePtr& templ = spec_.screens.at(screen);
    if (!spec_.perturbation_seed) return templ;
    auto [it, inserted] = rendered_.try_emplace(screen);
    if (inserted) {
        it->second = make_tree(perturb_automation_ids(templ->to_node(), *spec_.perturbation_seed));
    }
    return it->second;
}

TreePtr Env::reset(std::span<const Objective> objectives, std::uint64_t seed) {
    for (const auto& o : objectives) {
        if (!spec_.has_event(o.event_name)) throw UnknownEvent(spec_.name + " never fires '" + o.event_name + "'");
        if (o.target_count < 1) throw UnknownEvent("target_count must be positive for '" + o.event_name + "'");
    }
    objectives_.assign(objectives.begin(), objectives.end());
    counts_.assign(objectives_.size(), 0);
    episode_seed_ = seed;
    screen_ = spec_.initial_screen;
    state_ = render(screen_);
    ready_ = true;
    done_ = false;
    return state_;
}

StepResult Env::step(const UIAction& action) {
    if (!ready_) throw NotReset("step before reset");
    if (done_) throw NotReset("episode is done; reset first");

    auto index = state_->find(action.node);
    if (!index) {
        if (!options_.lenient) throw NodeNotInState("node " + action.node.hex() + " is not on screen '" + screen_ + "'");
        return StepResult{state_, 0.0, false, {}, true};
    }
    const NodeIdentifier template_id = spec_.screens.at(screen_)->identifier(*index);
    const auto effect = spec_.effect(screen_, template_id, action.type);

    StepResult result;
    if (effect.event) {
        result.fired_events.push_back(*effect.event);
        for (std::size_t k = 0; k < objectives_.size(); ++k) {
            if (objectives_[k].event_name != *effect.event) continue;
            ++counts_[k];
            result.reward += 1.0;
            if (counts_[k] >= objectives_[k].target_count) done_ = true;
        }
    }
    screen_ = effect.next_screen;
    state_ = render(screen_);
    result.next_state = state_;
    result.done = done_;
    return result;
}

}  // namespace drift
