#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drift/data.hpp"
#include "drift/env.hpp"
#include "drift/featurize.hpp"
#include "drift/rng.hpp"
#include "drift/uitree.hpp"

namespace drift::testing {

inline UINode node(std::optional<std::string> aid, std::string cls, std::string control, std::string process = "demo",
                   std::vector<UINode> children = {}) {
    return UINode{{std::move(aid), std::move(cls), std::move(control), std::move(process)}, std::move(children)};
}

inline UINode button(const std::string& aid, std::string process = "demo") {
    return node(aid, "Button", "Button", std::move(process));
}

inline UINode on_desktop(std::vector<UINode> windows) {
    return UINode{desktop_properties(), std::move(windows)};
}

/// Random tree with `n` nodes drawn from small property pools, so values repeat.
inline UINode random_tree(Rng& rng, std::size_t n) {
    static const std::vector<std::string> classes = {"Button", "TextBlock", "ListViewItem", "Pane", "Image"};
    static const std::vector<std::string> controls = {"Button", "Text", "ListItem", "Pane", "Image", "MenuItem"};
    static const std::vector<std::string> processes = {"demo", "other"};
    std::vector<UINode> nodes;
    std::vector<int> parent(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        std::optional<std::string> aid;
        if (rng.uniform01() < 0.6) aid = "id" + std::to_string(rng.uniform_index(6));
        nodes.push_back(node(aid, classes[rng.uniform_index(classes.size())], controls[rng.uniform_index(controls.size())],
                             processes[rng.uniform_index(processes.size())]));
        if (i > 0) parent[i] = static_cast<int>(rng.uniform_index(i));
    }
    // Attach children bottom-up so that indices stay valid.
    for (std::size_t i = n; i-- > 1;) {
        auto& p = nodes[static_cast<std::size_t>(parent[i])];
        p.children.insert(p.children.begin(), std::move(nodes[i]));
    }
    return std::move(nodes[0]);
}

/// One screen per entry of `actions`; screen s has actions[s] buttons.
/// Button 0 of screen s advances to screen s+1 (the last screen's button 0
/// fires "goal" and returns to the first screen); the rest are inert.
inline AppSpec chain_app(const std::vector<int>& actions) {
    AppSpec spec;
    spec.name = "chain";
    spec.initial_screen = "s0";
    for (std::size_t s = 0; s < actions.size(); ++s) {
        std::vector<UINode> buttons;
        for (int b = 0; b < actions[s]; ++b) buttons.push_back(button("s" + std::to_string(s) + "b" + std::to_string(b)));
        const std::string id = "s" + std::to_string(s);
        spec.screens[id] = make_tree(on_desktop({node(id, "Window", "Window", "demo", std::move(buttons))}));
        const Trigger t{id, node_identifier(button(id + "b0")), ActionType::LeftClick};
        if (s + 1 < actions.size()) {
            spec.transitions[t] = "s" + std::to_string(s + 1);
        } else {
            spec.transitions[t] = "s0";
            spec.events[t] = "goal";
        }
    }
    return spec;
}

}  // namespace drift::testing

namespace drift::testing {

struct ChainData {
    EpisodeStore store;
    Vocabulary vocab;
    TrainingSet set;
};

/// Random episodes on chain_app(actions), featurized with min_count 1.
inline ChainData chain_data(const std::vector<int>& actions, std::size_t episodes, std::uint64_t seed = 0) {
    ChainData d;
    d.store = collect_random_episodes(chain_app(actions), Objective{"goal"}, episodes, 200, seed);
    d.vocab = build_vocabulary(d.store.episodes(), 1);
    const Objective goal{"goal"};
    d.set = build_training_set(d.store, std::span(&goal, 1), "", d.vocab);
    return d;
}

}  // namespace drift::testing
