#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "drift/errors.hpp"
#include "drift/policy.hpp"
#include "support/fixtures.hpp"

using namespace drift;

TEST(Argmax, FirstMaximumWins) {
    EXPECT_EQ(argmax_first(std::vector<double>{1, 3, 3, 2}), 1u);
    EXPECT_EQ(argmax_first(std::vector<double>{0, 0, 0}), 0u);
    EXPECT_EQ(argmax_first(std::vector<double>{-5}), 0u);
}

TEST(Softmax, TwoActionsAtUnitTemperature) {
    const auto p = softmax(std::vector<double>{1, 0}, 1.0);
    EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(Softmax, Limits) {
    const std::vector<double> q = {0.3, 0.9, 0.1, 0.9};
    const auto cold = softmax(q, 1e-6);
    EXPECT_NEAR(cold[1], 0.5, 1e-12);
    EXPECT_NEAR(cold[3], 0.5, 1e-12);
    EXPECT_NEAR(cold[0], 0.0, 1e-12);
    const auto hot = softmax(q, INFINITY);
    for (double v : hot) EXPECT_DOUBLE_EQ(v, 0.25);
    const auto warm = softmax(q, 1e6);
    for (double v : warm) EXPECT_NEAR(v, 0.25, 1e-6);
}

TEST(Softmax, ShiftAndScaleInvariance) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> q(1 + rng.uniform_index(8));
        for (double& v : q) v = rng.uniform(-2, 2);
        const double m = std::exp(rng.uniform(-3, 2));
        const double shift = rng.uniform(-100, 100), scale = std::exp(rng.uniform(-2, 2));
        std::vector<double> shifted = q, scaled = q;
        for (double& v : shifted) v += shift;
        for (double& v : scaled) v *= scale;
        const auto base = softmax(q, m);
        const auto a = softmax(shifted, m);
        const auto b = softmax(scaled, m * scale);
        for (std::size_t k = 0; k < q.size(); ++k) {
            EXPECT_NEAR(a[k], base[k], 1e-12);
            EXPECT_NEAR(b[k], base[k], 1e-12);
        }
    }
}

TEST(Softmax, ExtremeValuesStayFinite) {
    const auto p = softmax(std::vector<double>{1e300, -1e300, 0}, 1e-3);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_THROW(softmax(std::vector<double>{}, 1.0), NoActions);
}

TEST(SampleCategorical, MatchesProbabilities) {
    const std::vector<double> p = {0.1, 0.0, 0.6, 0.3};
    Rng rng(17);
    std::vector<int> counts(4, 0);
    const int n = 200000;
    for (int k = 0; k < n; ++k) ++counts[sample_categorical(p, rng)];
    EXPECT_EQ(counts[1], 0);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(counts[k] / double(n), p[k], 0.005);
}

TEST(ActRandom, UniformOverEnumeratedActions) {
    const UITree tree(drift::testing::on_desktop(
        {drift::testing::button("a"), drift::testing::button("b"), drift::testing::button("c")}));
    Rng rng(2);
    std::map<std::uint64_t, int> counts;
    for (int k = 0; k < 30000; ++k) ++counts[act_random(tree, rng).node.value];
    ASSERT_EQ(counts.size(), 3u);
    for (const auto& [id, c] : counts) EXPECT_NEAR(c / 30000.0, 1.0 / 3.0, 0.015);
    const UITree empty(drift::testing::on_desktop({}));
    EXPECT_THROW(act_random(empty, rng), NoActions);
}

TEST(PolicyKind, ParseAndValidate) {
    for (auto k : {PolicyKind::Greedy, PolicyKind::Sampler, PolicyKind::Random, PolicyKind::QHash}) {
        EXPECT_EQ(parse_policy_kind(to_string(k)), k);
    }
    EXPECT_THROW(parse_policy_kind("boltzmann"), ConfigError);
    EXPECT_THROW((PolicySpec{PolicyKind::Sampler, 0.0, 0}).validate(), ConfigError);
    EXPECT_THROW((PolicySpec{PolicyKind::Sampler, -1.0, 0}).validate(), ConfigError);
    EXPECT_NO_THROW((PolicySpec{PolicyKind::Sampler, INFINITY, 0}).validate());
}

TEST(MakeAgent, MissingResources) {
    EXPECT_THROW(make_agent({PolicyKind::Greedy, 1.0, 0}, {}), ConfigError);
    EXPECT_THROW(make_agent({PolicyKind::QHash, 1.0, 0}, {}), ConfigError);
    auto random = make_agent({PolicyKind::Random, 1.0, 0}, {});
    EXPECT_FALSE(random->strict());
}

TEST(NetworkPolicies, GreedyPicksFirstBestAndSamplerApproachesIt) {
    const auto d = drift::testing::chain_data({3, 4}, 10);
    TrainerConfig c;
    c.batch_size = 16;
    c.total_steps = 300;
    c.shape.heads = 2;
    c.shape.head_width = 4;
    const auto result = train(d.set, c);
    PolicyResources res;
    res.network = std::make_shared<const QNetwork>(result.network);
    res.vocab = std::make_shared<const Vocabulary>(d.vocab);
    const auto& state = d.set.states.front();
    const auto values = action_values(*res.network, state);
    const UITree& tree = *d.store[0].transitions[0].state;
    ASSERT_EQ(tree.canonical_hash(), state.hash);

    const UIAction best = state.actions[argmax_first(values)];
    EXPECT_EQ(act_greedy(*res.network, tree, d.vocab), best);
    auto greedy = make_agent({PolicyKind::Greedy, 1.0, 0}, res);
    Rng rng(0);
    EXPECT_EQ(greedy->act(tree, rng), best);
    EXPECT_TRUE(greedy->strict());

    auto cold = make_agent({PolicyKind::Sampler, 1e-9, 0}, res);
    for (int k = 0; k < 50; ++k) EXPECT_EQ(cold->act(tree, rng), best);

    // At m = +inf the sampler is the random agent.
    auto hot = make_agent({PolicyKind::Sampler, INFINITY, 0}, res);
    EXPECT_FALSE(hot->strict());
}

TEST(QHashTable, KeysAndPersistence) {
    const UIAction a{NodeIdentifier{7}, ActionType::LeftClick};
    const UIAction b{NodeIdentifier{7}, ActionType::RightClick};
    EXPECT_NE(QHashTable::key(1, a), QHashTable::key(1, b));
    EXPECT_NE(QHashTable::key(1, a), QHashTable::key(2, a));
    QHashTable t;
    EXPECT_EQ(t.value(QHashTable::key(1, a)), 0.0);
    t.set(QHashTable::key(1, a), 0.75);
    t.set(QHashTable::key(3, b), -0.125);
    const auto back = QHashTable::from_json(t.to_json());
    EXPECT_EQ(back.entries(), t.entries());
    EXPECT_EQ(back.to_json(), t.to_json());
    const auto path = (std::filesystem::temp_directory_path() / "drift_qhash_test.json").string();
    t.save(path);
    EXPECT_EQ(QHashTable::load(path).entries(), t.entries());
    std::filesystem::remove(path);
}

TEST(QHash, LearnsTrainingVariantAndMissesPerturbed) {
    const AppSpec spec = drift::testing::chain_app({3, 4});
    const auto store = collect_random_episodes(spec, Objective{"goal"}, 10, 200, 0);
    const Objective goal{"goal"};
    const auto transitions = prepare_transitions(store, std::span(&goal, 1), "");
    const QHashTable table = qhash_fit(transitions, TrainerConfig{});

    Env env(spec);
    auto s = env.reset(goal, 0);
    auto r = env.step(qhash_act(table, *s));
    r = env.step(qhash_act(table, *r.next_state));
    EXPECT_TRUE(r.done);

    // The rewarded pair converges to r: 50 epochs at rate 0.5 leave at most 2^-50.
    for (const auto& t : transitions) {
        if (t.done) EXPECT_NEAR(table.value(QHashTable::key(t.state->canonical_hash(), t.action)), 1.0, 1e-12);
    }

    AppSpec moved = spec;
    moved.perturbation_seed = 99;
    Env penv(moved);
    const auto p = penv.reset(goal, 0);
    for (const auto& a : enumerate_actions(*p)) EXPECT_FALSE(table.contains(QHashTable::key(p->canonical_hash(), a)));
    EXPECT_EQ(qhash_act(table, *p), enumerate_actions(*p).front());
}
