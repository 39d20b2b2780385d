#include "drift/qlearn.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>

#include "drift/errors.hpp"
#include "drift/hash.hpp"
#include "drift/rng.hpp"

namespace drift {

void TrainerConfig::validate() const {
    if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in (0, 1]");
    if (target_update_frequency < 1) throw ConfigError("target_update_frequency must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (total_steps < 0) throw ConfigError("total_steps must be non-negative");
    if (eval_every < 0) throw ConfigError("eval_every must be non-negative");
    if (shape.heads < 1 || shape.head_width < 1) throw ConfigError("heads and head_width must be positive");
}

namespace {

double max_action_value(const QNetwork& net, const EncodedState& state) {
    if (state.slots.empty()) {
        std::cerr << "warning: next state " << to_hex(state.hash) << " has no actions; bootstrapping 0\n";
        return 0.0;
    }
    const Matrix q = net.forward(state.graph);
    double best = q(state.slots[0].node, state.slots[0].type);
    for (const auto& s : state.slots) best = std::max(best, q(s.node, s.type));
    return best;
}

}  // namespace

std::vector<double> td_targets(const TrainingSet& data, std::span<const std::size_t> batch, const QNetwork& target,
                               double discount) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (std::size_t k : batch) {
        const auto& t = data.transitions.at(k);
        y.push_back(t.done ? t.reward : t.reward + discount * max_action_value(target, data.states[t.next_state]));
    }
    return y;
}

Trainer::Trainer(const TrainingSet& data, TrainerConfig config) : data_(data), config_(std::move(config)) {
    config_.validate();
    if (data.transitions.empty()) throw EmptyCorpus("training set has no transitions");
    config_.shape.input_width = data.width;
    config_.shape.action_types = data.action_types.size();
    net_ = QNetwork(config_.shape, derive_seed(config_.seed, 1));
    target_ = net_;
    adam_ = Adam(net_, AdamConfig{config_.learning_rate});
    max_cache_.assign(data.states.size(), std::nullopt);
}

double Trainer::target_max(std::size_t state) {
    auto& slot = max_cache_[state];
    if (!slot) slot = max_action_value(target_, data_.states[state]);
    return *slot;
}

double Trainer::train_step(std::span<const std::size_t> batch) {
    if (batch.empty()) throw ShapeMismatch("empty batch");
    std::vector<QSample> samples;
    std::vector<double> targets;
    samples.reserve(batch.size());
    targets.reserve(batch.size());
    for (std::size_t k : batch) {
        const auto& t = data_.transitions.at(k);
        samples.push_back({&data_.states[t.state].graph, t.action});
        targets.push_back(t.done ? t.reward : t.reward + config_.discount * target_max(t.next_state));
    }
    net_.zero_grad();
    const double loss = loss_and_gradients(net_, samples, targets);
    adam_.step(net_);
    ++step_;
    losses_.push_back(loss);
    if (step_ % config_.target_update_frequency == 0) {
        target_ = net_;
        ++syncs_;
        std::fill(max_cache_.begin(), max_cache_.end(), std::nullopt);
    }
    return loss;
}

TrainingResult train(const TrainingSet& data, const TrainerConfig& config, const EvalHook& hook) {
    Trainer trainer(data, config);
    TrainingResult result;
    if (hook) result.evals.push_back(hook(trainer.network(), 0));

    Rng rng(derive_seed(config.seed, 2));
    std::vector<std::size_t> order(data.transitions.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t pos = order.size();
    for (long s = 1; s <= config.total_steps; ++s) {
        if (pos >= order.size()) {
            rng.shuffle(std::span(order));
            pos = 0;
        }
        const std::size_t len = std::min(config.batch_size, order.size() - pos);
        trainer.train_step(std::span(order).subspan(pos, len));
        pos += len;
        if (hook && config.eval_every > 0 && s % config.eval_every == 0) {
            result.evals.push_back(hook(trainer.network(), s));
        }
    }
    result.network = trainer.network();
    result.losses = trainer.losses();
    return result;
}

void write_metrics_csv(const TrainingResult& result, const std::string& path, const std::string& fingerprint) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "# config=" << fingerprint << "\nstep,loss,eval_reward,eval_unique_states\n";
    std::size_t e = 0;
    const long last = static_cast<long>(result.losses.size());
    for (long s = 0; s <= last; ++s) {
        const bool has_eval = e < result.evals.size() && result.evals[e].step == s;
        if (s == 0 && !has_eval) continue;
        out << s << ',';
        if (s > 0) out << result.losses[static_cast<std::size_t>(s - 1)];
        out << ',';
        if (has_eval) {
            out << result.evals[e].reward << ',' << result.evals[e].unique_states;
            ++e;
        } else {
            out << ',';
        }
        out << '\n';
    }
}

}  // namespace drift
