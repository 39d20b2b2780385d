#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drift/featurize.hpp"
#include "drift/matrix.hpp"

namespace drift {

/// A trainable block: values plus a same-shaped gradient accumulator.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, std::size_t rows, std::size_t cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
};

/// Compressed in-neighbourhoods: for node i, sources[offsets[i]..offsets[i+1])
/// holds i itself first, then every j with an edge (j, i).
struct Neighborhoods {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> sources;

    static Neighborhoods from_edges(std::size_t n, const EdgeList& edges);
};

/// Multi-head graph attention layer without bias. The per-head weight
/// matrices W_h are stored side by side as the column blocks of one
/// in_dim × (heads·out_dim) matrix; row h of `attention` is a_h = [a_src ‖ a_dst].
///
///   h_i    = W_hᵀ v_i
///   e_ij   = LeakyReLU(a_srcᵀ h_i + a_dstᵀ h_j),   j ∈ {i} ∪ N(i)
///   α_ij   = softmax_j(e_ij)
///   v'_i   = Σ_j α_ij h_j                         (heads concatenated)
class GatLayer {
public:
    GatLayer() = default;
    GatLayer(std::string name, std::size_t in_dim, std::size_t out_dim, std::size_t heads, double leaky_slope);

    std::size_t in_dim() const noexcept { return in_dim_; }
    std::size_t out_dim() const noexcept { return out_dim_; }
    std::size_t heads() const noexcept { return heads_; }
    std::size_t output_width() const noexcept { return heads_ * out_dim_; }
    double leaky_slope() const noexcept { return slope_; }

    Parameter& weight() noexcept { return weight_; }
    const Parameter& weight() const noexcept { return weight_; }
    Parameter& attention() noexcept { return attention_; }
    const Parameter& attention() const noexcept { return attention_; }

    /// Intermediate values kept for the backward pass.
    struct Cache {
        const Matrix* input = nullptr;
        Matrix transformed;              // n × heads·out_dim
        std::vector<double> alpha;       // [head][edge slot]
        std::vector<double> logits;      // pre-activation, same layout
    };

    Matrix forward(const Matrix& features, const Neighborhoods& graph, Cache* cache = nullptr) const;

    /// Accumulates parameter gradients; returns dL/dinput when `want_input_grad`.
    Matrix backward(const Matrix& grad_output, const Neighborhoods& graph, const Cache& cache,
                    bool want_input_grad);

    /// Attention coefficients of head h, laid out like graph.sources.
    std::vector<double> attention_coefficients(const Matrix& features, const Neighborhoods& graph,
                                               std::size_t head) const;

private:
    std::size_t in_dim_ = 0;
    std::size_t out_dim_ = 0;
    std::size_t heads_ = 1;
    double slope_ = 0.2;
    Parameter weight_;
    Parameter attention_;
};

/// Throws ShapeMismatch or NonFiniteInput.
Matrix gat_layer_forward(const GatLayer& layer, const Matrix& features, const EdgeList& edges);

struct NetworkShape {
    std::size_t input_width = 0;
    std::size_t heads = 8;
    std::size_t head_width = 10;
    std::size_t action_types = 1;
    double leaky_slope = 0.2;

    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Q(s, ·): GAT(heads, concat) → ReLU → GAT(1 head). Row i, column e of the
/// output is Q(s, (type e, node i)).
class QNetwork {
public:
    QNetwork() = default;
    /// Glorot-uniform initialization from `seed`.
    QNetwork(const NetworkShape& shape, std::uint64_t seed);

    const NetworkShape& shape() const noexcept { return shape_; }
    GatLayer& layer1() noexcept { return layer1_; }
    GatLayer& layer2() noexcept { return layer2_; }
    const GatLayer& layer1() const noexcept { return layer1_; }
    const GatLayer& layer2() const noexcept { return layer2_; }

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    void zero_grad();

    struct Cache {
        GatLayer::Cache layer1;
        Matrix hidden_pre;   // layer-1 output before ReLU
        Matrix hidden;       // after ReLU
        GatLayer::Cache layer2;
    };

    Matrix forward(const VectorizedState& state, Cache* cache = nullptr) const;
    Matrix forward(const VectorizedState& state, const Neighborhoods& graph, Cache* cache = nullptr) const;
    void backward(const Matrix& grad_q, const Neighborhoods& graph, Cache& cache);

    /// Vocabulary fingerprint this network was trained against (0 = unset).
    std::uint64_t vocab_fingerprint = 0;

    void save(const std::string& path) const;
    std::string to_json() const;
    /// Verifies the stored fingerprint against `vocab`; throws FingerprintMismatch.
    static QNetwork load(const std::string& path, const Vocabulary& vocab);
    static QNetwork from_json(std::string_view text);

private:
    NetworkShape shape_;
    GatLayer layer1_;
    GatLayer layer2_;
};

/// Throws ShapeMismatch when the feature width differs from the network input.
Matrix q_forward(const QNetwork& net, const VectorizedState& state);

/// Q(s,a) as the dot product of the network output with the vectorized action.
double q_value(const Matrix& q, const VectorizedAction& action);

struct QSample {
    const VectorizedState* state = nullptr;
    ActionSlot action;
};

/// Mean squared TD error over the batch; exact gradients are accumulated into
/// the network's parameters. Each distinct state is propagated once.
/// Throws ShapeMismatch or NonFiniteLoss.
double loss_and_gradients(QNetwork& net, std::span<const QSample> batch, std::span<const double> targets);

struct AdamConfig {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(const QNetwork& net, AdamConfig config);

    /// Bias-corrected update of every parameter, then zeroes the gradients.
    void step(QNetwork& net);
    long steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long t_ = 0;
};

struct GradientCheckReport {
    struct Block {
        std::string name;
        std::size_t checked = 0;
        double max_relative_error = 0.0;
    };
    std::vector<Block> blocks;
    double max_relative_error = 0.0;
    bool passed = false;
};

struct GradientCheckOptions {
    std::size_t coordinates_per_block = 64;
    std::uint64_t seed = 0;
    /// Applied to the network after the analytic backward pass (fault injection in tests).
    std::function<void(QNetwork&)> after_backward;
};

/// Compares analytic gradients with central differences on a random subsample
/// of each block (all coordinates when the block is small). Relative error is
/// |g - ĝ| / max(|g|, |ĝ|, 1e-5).
GradientCheckReport gradient_check(QNetwork net, std::span<const QSample> batch, std::span<const double> targets,
                                   double step, double tolerance, const GradientCheckOptions& options = {});

}  // namespace drift
