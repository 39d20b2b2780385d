#include <gtest/gtest.h>

#include <set>

#include "drift/errors.hpp"
#include "drift/env.hpp"
#include "drift/hash.hpp"
#include "support/fixtures.hpp"

using namespace drift;

namespace {

UIAction click(const UITree& tree, const std::string& aid) {
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (tree.props(i).automation_id == aid) return {tree.identifier(i), ActionType::LeftClick};
    }
    ADD_FAILURE() << "no node with AutomationID " << aid;
    return {};
}

std::size_t count_category_pages(const AppSpec& spec) {
    std::size_t n = 0;
    for (const auto& [id, tree] : spec.screens) n += id.rfind("landing:", 0) == 0;
    return n;
}

}  // namespace

TEST(BuiltinApps, ListedAndValid) {
    std::set<std::string> names;
    for (const auto& app : list_builtin_apps()) {
        EXPECT_NO_THROW(app.validate());
        names.insert(app.name);
    }
    EXPECT_EQ(names, (std::set<std::string>{"browser", "browser_perturbed", "settings", "settings_perturbed"}));
    EXPECT_THROW(resolve_app("no_such_app_or_file"), InvalidAppSpec);
}

TEST(BuiltinApps, SettingsShape) {
    const AppSpec spec = resolve_app("settings");
    EXPECT_GE(count_category_pages(spec), 8u);
    Env env(spec);
    const auto home = env.reset(Objective{"notifications_panel_opened"}, 0);
    EXPECT_GE(enumerate_actions(*home).size(), 21u);  // the target tile plus at least 20 distractors
    EXPECT_TRUE(spec.has_event("notifications_panel_opened"));
    EXPECT_TRUE(spec.has_event("add_bluetooth_clicked"));
}

TEST(BuiltinApps, BrowserShape) {
    const AppSpec spec = resolve_app("browser");
    Env env(spec);
    const auto start = env.reset(Objective{"favorite_added"}, 0);
    EXPECT_GE(enumerate_actions(*start).size(), 16u);
}

TEST(BuiltinApps, NotificationsInTwoClicks) {
    Env env(resolve_app("settings"));
    auto s = env.reset(Objective{"notifications_panel_opened"}, 0);
    auto r = env.step(click(*s, "SettingsPageGroupSystem"));
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_FALSE(r.done);
    r = env.step(click(*r.next_state, "SettingsPageSystemNotifications"));
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.fired_events, std::vector<std::string>{"notifications_panel_opened"});
    EXPECT_THROW(env.step(click(*r.next_state, "HomeButton")), NotReset);
}

TEST(BuiltinApps, BluetoothInTwoClicks) {
    Env env(resolve_app("settings"));
    auto s = env.reset(Objective{"add_bluetooth_clicked"}, 0);
    auto r = env.step(click(*s, "SettingsPageGroupDevices"));
    r = env.step(click(*r.next_state, "AddBluetoothButton"));
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.reward, 1.0);
}

TEST(BuiltinApps, FavoriteInTwoClicks) {
    Env env(resolve_app("browser"));
    auto s = env.reset(Objective{"favorite_added"}, 0);
    auto r = env.step(click(*s, "SettingsAndMoreButton"));
    r = env.step(click(*r.next_state, "AddToFavoritesMenuItem"));
    EXPECT_TRUE(r.done);
}

TEST(Env, StepBeforeResetThrows) {
    Env env(resolve_app("settings"));
    EXPECT_THROW(env.step(UIAction{}), NotReset);
}

TEST(Env, UnknownEventThrows) {
    Env env(resolve_app("settings"));
    EXPECT_THROW(env.reset(Objective{"favorite_added"}, 0), UnknownEvent);
}

TEST(Env, InertElementIsNoOp) {
    Env env(resolve_app("settings"));
    const auto s = env.reset(Objective{"notifications_panel_opened"}, 0);
    const auto r = env.step(click(*s, "QuickUpdate"));
    EXPECT_EQ(r.next_state->canonical_hash(), s->canonical_hash());
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_TRUE(r.fired_events.empty());
}

TEST(Env, StrictAndLenientStaleActions) {
    Env strict(resolve_app("settings"));
    strict.reset(Objective{"notifications_panel_opened"}, 0);
    EXPECT_THROW(strict.step(UIAction{NodeIdentifier{42}, ActionType::LeftClick}), NodeNotInState);

    Env lenient(resolve_app("settings"), EnvOptions{true});
    const auto s = lenient.reset(Objective{"notifications_panel_opened"}, 0);
    const auto r = lenient.step(UIAction{NodeIdentifier{42}, ActionType::LeftClick});
    EXPECT_TRUE(r.stale);
    EXPECT_EQ(r.next_state, s);
}

TEST(Env, DeterministicTrajectories) {
    const AppSpec spec = resolve_app("browser_perturbed");
    auto run = [&] {
        Env env(spec);
        Rng rng(11);
        auto s = env.reset(Objective{"favorite_added", 3}, 5);
        std::vector<std::uint64_t> hashes{s->canonical_hash()};
        for (int k = 0; k < 300 && !env.done(); ++k) {
            const auto actions = enumerate_actions(*s);
            s = env.step(actions[rng.uniform_index(actions.size())]).next_state;
            hashes.push_back(s->canonical_hash());
        }
        return hashes;
    };
    EXPECT_EQ(run(), run());
}

TEST(Env, TargetCountControlsTermination) {
    const AppSpec spec = drift::testing::chain_app({2, 2});
    Env env(spec);
    auto s = env.reset(Objective{"goal", 2}, 0);
    auto first = [&](const TreePtr& t) { return enumerate_actions(*t).front(); };
    auto r = env.step(first(s));
    r = env.step(first(r.next_state));
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_FALSE(r.done);
    EXPECT_EQ(env.counts()[0], 1);
    r = env.step(first(r.next_state));
    r = env.step(first(r.next_state));
    EXPECT_TRUE(r.done);
    EXPECT_EQ(env.counts()[0], 2);
}

TEST(Env, PerturbationChangesOnlyAutomationIds) {
    for (const auto& [plain, variant] : {std::pair{"settings", "settings_perturbed"}, std::pair{"browser", "browser_perturbed"}}) {
        const AppSpec a = resolve_app(plain);
        const AppSpec b = resolve_app(variant);
        EXPECT_EQ(a.event_names(), b.event_names());
        Env ea(a), eb(b);
        const auto ta = ea.reset(std::span<const Objective>{}, 0);
        const auto tb = eb.reset(std::span<const Objective>{}, 0);
        EXPECT_NE(serialize_tree(*ta), serialize_tree(*tb));
        ASSERT_EQ(ta->size(), tb->size());
        std::size_t changed = 0;
        for (std::size_t i = 0; i < ta->size(); ++i) {
            EXPECT_EQ(ta->parent(i), tb->parent(i));
            EXPECT_EQ(ta->props(i).class_name, tb->props(i).class_name);
            EXPECT_EQ(ta->props(i).control_type, tb->props(i).control_type);
            EXPECT_EQ(ta->props(i).process_name, tb->props(i).process_name);
            EXPECT_EQ(ta->props(i).automation_id.has_value(), tb->props(i).automation_id.has_value());
            changed += ta->props(i).automation_id != tb->props(i).automation_id;
        }
        EXPECT_GT(changed, 0u);
    }
}

TEST(Env, PerturbedRenderingIsStableAcrossResets) {
    Env env(resolve_app("settings_perturbed"));
    const auto first = env.reset(std::span<const Objective>{}, 1)->canonical_hash();
    EXPECT_EQ(env.reset(std::span<const Objective>{}, 2)->canonical_hash(), first);
}

TEST(Env, PerturbedVariantStillReachesEvents) {
    Env env(resolve_app("settings_perturbed"));
    auto s = env.reset(Objective{"notifications_panel_opened"}, 0);
    // Positions are unchanged, so the same pre-order indices lead to the event.
    Env plain(resolve_app("settings"));
    auto p = plain.reset(Objective{"notifications_panel_opened"}, 0);
    auto index_of = [](const UITree& t, const std::string& aid) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t.props(i).automation_id == aid) return i;
        }
        return t.size();
    };
    const std::size_t tile = index_of(*p, "SettingsPageGroupSystem");
    auto r = env.step({s->identifier(tile), ActionType::LeftClick});
    const auto p2 = plain.step(click(*p, "SettingsPageGroupSystem")).next_state;
    const std::size_t item = index_of(*p2, "SettingsPageSystemNotifications");
    r = env.step({r.next_state->identifier(item), ActionType::LeftClick});
    EXPECT_TRUE(r.done);
}

TEST(AppSpec, JsonRoundTrip) {
    for (const auto& app : list_builtin_apps()) {
        const AppSpec back = AppSpec::from_json(app.to_json());
        EXPECT_EQ(back.to_json(), app.to_json());
        EXPECT_EQ(back.transitions.size(), app.transitions.size());
        EXPECT_EQ(back.perturbation_seed, app.perturbation_seed);
    }
}

TEST(AppSpec, ValidationFailures) {
    AppSpec spec = drift::testing::chain_app({2, 2});
    spec.initial_screen = "missing";
    EXPECT_THROW(spec.validate(), InvalidAppSpec);

    spec = drift::testing::chain_app({2, 2});
    spec.transitions.begin()->second = "missing";
    EXPECT_THROW(spec.validate(), InvalidAppSpec);

    spec = drift::testing::chain_app({2, 2});
    spec.screens["island"] = spec.screens["s0"];
    EXPECT_THROW(spec.validate(), InvalidAppSpec);

    spec = drift::testing::chain_app({2, 2});
    spec.screens["s1"] = make_tree(drift::testing::on_desktop({drift::testing::node("w", "Window", "Window")}));
    EXPECT_THROW(spec.validate(), InvalidAppSpec);
}

TEST(PerturbAutomationIds, DeterministicPerSalt) {
    Rng rng(5);
    const UINode tree = drift::testing::random_tree(rng, 30);
    EXPECT_EQ(perturb_automation_ids(tree, 1), perturb_automation_ids(tree, 1));
    EXPECT_NE(serialize_node(perturb_automation_ids(tree, 1)), serialize_node(perturb_automation_ids(tree, 2)));
}
