#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drift/data.hpp"
#include "drift/nn.hpp"

namespace drift {

struct TrainerConfig {
    double discount = 0.1;                 // γ
    long target_update_frequency = 100;    // η, in steps
    std::size_t batch_size = 128;
    double learning_rate = 1e-2;           // β
    long total_steps = 600;
    std::uint64_t seed = 0;
    long eval_every = 0;                   // 0 disables the hook cadence
    NetworkShape shape;                    // input_width/action_types are filled from the data

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// y = r for done transitions, otherwise r + γ·max_a' Q(s', a'; θ⁻) over the
/// next state's enumerated actions. A next state without actions bootstraps 0.
std::vector<double> td_targets(const TrainingSet& data, std::span<const std::size_t> batch, const QNetwork& target,
                               double discount);

/// Single-threaded DQN trainer over a fixed transition set.
class Trainer {
public:
    Trainer(const TrainingSet& data, TrainerConfig config);

    /// Targets, loss, gradients and one Adam update; syncs θ⁻ when step % η == 0.
    double train_step(std::span<const std::size_t> batch);

    const QNetwork& network() const noexcept { return net_; }
    QNetwork& network() noexcept { return net_; }
    const QNetwork& target() const noexcept { return target_; }
    long step() const noexcept { return step_; }
    std::size_t syncs() const noexcept { return syncs_; }
    const std::vector<double>& losses() const noexcept { return losses_; }
    const TrainerConfig& config() const noexcept { return config_; }

private:
    double target_max(std::size_t state);

    const TrainingSet& data_;
    TrainerConfig config_;
    QNetwork net_;
    QNetwork target_;
    Adam adam_;
    long step_ = 0;
    std::size_t syncs_ = 0;
    std::vector<double> losses_;
    std::vector<std::optional<double>> max_cache_;
};

struct EvalPoint {
    long step = 0;
    double reward = 0.0;
    std::size_t unique_states = 0;
};

/// Called with a snapshot of the policy network and the current step count.
using EvalHook = std::function<EvalPoint(const QNetwork&, long step)>;

struct TrainingResult {
    QNetwork network;
    std::vector<double> losses;    // losses[k] belongs to step k + 1
    std::vector<EvalPoint> evals;
};

/// Epoch-shuffled mini-batches until total_steps. The hook runs at step 0
/// and every eval_every steps after that.
TrainingResult train(const TrainingSet& data, const TrainerConfig& config, const EvalHook& hook = {});

/// CSV with columns step,loss,eval_reward,eval_unique_states; eval columns
/// are empty on steps without an evaluation.
void write_metrics_csv(const TrainingResult& result, const std::string& path, const std::string& fingerprint);

}  // namespace drift
