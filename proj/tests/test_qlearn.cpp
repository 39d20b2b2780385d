#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "drift/errors.hpp"
#include "drift/hash.hpp"
#include "drift/qlearn.hpp"
#include "support/fixtures.hpp"

using namespace drift;

namespace {

TrainerConfig small_config() {
    TrainerConfig c;
    c.batch_size = 16;
    c.total_steps = 50;
    c.shape.heads = 2;
    c.shape.head_width = 4;
    return c;
}

/// Every Q value equals `value`: four-hot rows times a constant first layer
/// give hidden activations of 1, and the second layer averages them.
QNetwork constant_network(const NetworkShape& shape, double value) {
    QNetwork net(shape, 0);
    net.layer1().weight().value.fill(0.25);
    net.layer2().weight().value.fill(value / static_cast<double>(shape.heads * shape.head_width));
    return net;
}

NetworkShape shape_for(const TrainingSet& set) {
    NetworkShape s;
    s.input_width = set.width;
    s.heads = 2;
    s.head_width = 4;
    s.action_types = set.action_types.size();
    return s;
}

}  // namespace

TEST(TdTargets, TerminalUsesRewardOnly) {
    const auto d = drift::testing::chain_data({2, 3}, 6);
    const QNetwork target = constant_network(shape_for(d.set), 5.0);
    std::vector<std::size_t> batch(d.set.transitions.size());
    for (std::size_t k = 0; k < batch.size(); ++k) batch[k] = k;
    const auto y = td_targets(d.set, batch, target, 0.1);
    std::size_t terminals = 0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto& t = d.set.transitions[k];
        if (t.done) {
            ++terminals;
            EXPECT_EQ(y[k], t.reward);
        } else {
            EXPECT_NEAR(y[k], t.reward + 0.1 * 5.0, 1e-12);
        }
    }
    EXPECT_EQ(terminals, 6u);
}

TEST(TdTargets, ZeroRewardBootstrapsDiscountedMax) {
    const auto d = drift::testing::chain_data({2, 3}, 3);
    const QNetwork target = constant_network(shape_for(d.set), 1.0);
    for (std::size_t k = 0; k < d.set.transitions.size(); ++k) {
        const auto& t = d.set.transitions[k];
        if (t.done || t.reward != 0.0) continue;
        const std::size_t one[] = {k};
        EXPECT_NEAR(td_targets(d.set, one, target, 0.1)[0], 0.1, 1e-12);
    }
}

TEST(TdTargets, MaxOverEnumeratedActionsOnly) {
    const auto d = drift::testing::chain_data({2, 3}, 3);
    const QNetwork target(shape_for(d.set), 4);
    for (std::size_t k = 0; k < d.set.transitions.size(); ++k) {
        const auto& t = d.set.transitions[k];
        if (t.done) continue;
        const auto& next = d.set.states[t.next_state];
        const Matrix q = target.forward(next.graph);
        double best = -INFINITY;
        for (const auto& slot : next.slots) best = std::max(best, q(slot.node, slot.type));
        const std::size_t one[] = {k};
        EXPECT_NEAR(td_targets(d.set, one, target, 0.3)[0], t.reward + 0.3 * best, 1e-12);
    }
}

TEST(Trainer, SyncEveryStepWhenFrequencyIsOne) {
    const auto d = drift::testing::chain_data({2, 3}, 4);
    auto c = small_config();
    c.target_update_frequency = 1;
    Trainer trainer(d.set, c);
    const std::size_t batch[] = {0, 1, 2};
    for (int s = 0; s < 5; ++s) {
        trainer.train_step(batch);
        EXPECT_EQ(trainer.target().to_json(), trainer.network().to_json());
    }
    EXPECT_EQ(trainer.syncs(), 5u);
}

TEST(Trainer, HundredStepsGiveOneSync) {
    const auto d = drift::testing::chain_data({2, 3}, 4);
    auto c = small_config();
    Trainer trainer(d.set, c);
    const std::size_t batch[] = {0, 1};
    const std::string initial = trainer.target().to_json();
    for (int s = 0; s < 99; ++s) trainer.train_step(batch);
    EXPECT_EQ(trainer.syncs(), 0u);
    EXPECT_EQ(trainer.target().to_json(), initial);
    trainer.train_step(batch);
    EXPECT_EQ(trainer.syncs(), 1u);
    EXPECT_EQ(trainer.target().to_json(), trainer.network().to_json());
}

TEST(Trainer, OverfitsASingleBatch) {
    const auto d = drift::testing::chain_data({2, 3}, 4);
    auto c = small_config();
    c.target_update_frequency = 1000;
    Trainer trainer(d.set, c);
    std::vector<std::size_t> batch;
    for (std::size_t k = 0; k < std::min<std::size_t>(8, d.set.transitions.size()); ++k) batch.push_back(k);
    const double first = trainer.train_step(batch);
    double last = first;
    for (int s = 0; s < 300; ++s) last = trainer.train_step(batch);
    EXPECT_LT(last, 1e-3 * first + 1e-8);
}

TEST(Train, ZeroStepsLeavesInitialNetwork) {
    const auto d = drift::testing::chain_data({2, 3}, 4);
    auto c = small_config();
    c.total_steps = 0;
    c.seed = 12;
    const auto result = train(d.set, c);
    NetworkShape shape = c.shape;
    shape.input_width = d.set.width;
    shape.action_types = 1;
    EXPECT_EQ(result.network.to_json(), QNetwork(shape, derive_seed(12, 1)).to_json());
    EXPECT_TRUE(result.losses.empty());
}

TEST(Train, DeterministicGivenSeed) {
    const auto d = drift::testing::chain_data({2, 3}, 4);
    auto c = small_config();
    const auto a = train(d.set, c);
    const auto b = train(d.set, c);
    EXPECT_EQ(a.losses, b.losses);
    EXPECT_EQ(a.network.to_json(), b.network.to_json());
    c.seed = 1;
    EXPECT_NE(train(d.set, c).losses, a.losses);
}

TEST(Train, HookCadence) {
    const auto d = drift::testing::chain_data({2, 3}, 4);
    auto c = small_config();
    c.total_steps = 25;
    c.eval_every = 10;
    std::vector<long> calls;
    const auto result = train(d.set, c, [&](const QNetwork&, long step) {
        calls.push_back(step);
        return EvalPoint{step, 0.0, 1};
    });
    EXPECT_EQ(calls, (std::vector<long>{0, 10, 20}));
    EXPECT_EQ(result.evals.size(), 3u);
    EXPECT_EQ(result.losses.size(), 25u);
}

TEST(Train, LearnsTheChain) {
    const auto d = drift::testing::chain_data({3, 4}, 20);
    auto c = small_config();
    c.total_steps = 400;
    const auto result = train(d.set, c);
    // The advancing button is b0 on both screens.
    for (const auto& s : d.set.states) {
        if (s.slots.empty()) continue;
        const Matrix q = result.network.forward(s.graph);
        std::size_t best = 0;
        for (std::size_t k = 1; k < s.slots.size(); ++k) {
            if (q(s.slots[k].node, 0) > q(s.slots[best].node, 0)) best = k;
        }
        EXPECT_EQ(best, 0u);
    }
    EXPECT_LT(result.losses.back(), result.losses.front());
}

TEST(TrainerConfig, Validation) {
    auto bad = [](auto mutate) {
        TrainerConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), ConfigError);
    };
    bad([](TrainerConfig& c) { c.discount = 1.5; });
    bad([](TrainerConfig& c) { c.discount = -0.1; });
    bad([](TrainerConfig& c) { c.target_update_frequency = 0; });
    bad([](TrainerConfig& c) { c.batch_size = 0; });
    bad([](TrainerConfig& c) { c.learning_rate = 0.0; });
    bad([](TrainerConfig& c) { c.total_steps = -1; });
    EXPECT_NO_THROW(TrainerConfig{}.validate());
}

TEST(MetricsCsv, Layout) {
    TrainingResult r;
    r.losses = {0.5, 0.25};
    r.evals = {{0, 3.0, 7}, {2, 500.0, 2}};
    const auto path = (std::filesystem::temp_directory_path() / "drift_metrics_test.csv").string();
    write_metrics_csv(r, path, "abc");
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    std::filesystem::remove(path);
    EXPECT_EQ(text.rfind("# config=abc\nstep,loss,eval_reward,eval_unique_states\n", 0), 0u);
    EXPECT_NE(text.find("\n1,0.5,,\n"), std::string::npos);
}
