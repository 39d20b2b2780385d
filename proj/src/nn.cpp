#include "drift/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"
#include "drift/rng.hpp"

namespace drift {

Neighborhoods Neighborhoods::from_edges(std::size_t n, const EdgeList& edges) {
    Neighborhoods g;
    std::vector<std::size_t> degree(n, 1);
    for (const auto& [src, dst] : edges) {
        if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= n || static_cast<std::size_t>(dst) >= n) {
            throw ShapeMismatch("edge (" + std::to_string(src) + ", " + std::to_string(dst) + ") outside " +
                                std::to_string(n) + " nodes");
        }
        if (src == dst) throw ShapeMismatch("self-loop in edge list");
        ++degree[static_cast<std::size_t>(dst)];
    }
    g.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + degree[i];
    g.sources.resize(g.offsets[n]);
    std::vector<std::size_t> fill(g.offsets.begin(), g.offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) g.sources[fill[i]++] = i;
    for (const auto& [src, dst] : edges) {
        g.sources[fill[static_cast<std::size_t>(dst)]++] = static_cast<std::size_t>(src);
    }
    return g;
}

GatLayer::GatLayer(std::string name, std::size_t in_dim, std::size_t out_dim, std::size_t heads, double leaky_slope)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      heads_(heads),
      slope_(leaky_slope),
      weight_(name + ".weight", in_dim, heads * out_dim),
      attention_(name + ".attention", heads, 2 * out_dim) {
    if (heads == 0 || out_dim == 0 || in_dim == 0) throw ShapeMismatch("GAT layer dimensions must be positive");
}

Matrix GatLayer::forward(const Matrix& x, const Neighborhoods& graph, Cache* cache) const {
    const std::size_t n = x.rows();
    if (x.cols() != in_dim_) {
        throw ShapeMismatch("GAT input width " + std::to_string(x.cols()) + " != " + std::to_string(in_dim_));
    }
    if (graph.offsets.size() != n + 1) throw ShapeMismatch("neighbourhoods do not match node count");
    const std::size_t width = output_width();
    const std::size_t slots = graph.sources.size();

    // Linear transform; node features are mostly one-hot, so zero entries are skipped.
    Matrix t(n, width);
    for (std::size_t i = 0; i < n; ++i) {
        auto out = t.row(i);
        const auto in = x.row(i);
        for (std::size_t k = 0; k < in_dim_; ++k) {
            const double v = in[k];
            if (v == 0.0) continue;
            if (!std::isfinite(v)) throw NonFiniteInput("feature (" + std::to_string(i) + ", " + std::to_string(k) + ")");
            const auto w = weight_.value.row(k);
            for (std::size_t c = 0; c < width; ++c) out[c] += v * w[c];
        }
    }

    Matrix y(n, width);
    std::vector<double> alpha(heads_ * slots), logits(heads_ * slots);
    std::vector<double> s_src(n), s_dst(n);
    for (std::size_t h = 0; h < heads_; ++h) {
        const std::size_t col = h * out_dim_;
        const auto a = attention_.value.row(h);
        for (std::size_t i = 0; i < n; ++i) {
            double src = 0.0, dst = 0.0;
            for (std::size_t f = 0; f < out_dim_; ++f) {
                src += a[f] * t(i, col + f);
                dst += a[out_dim_ + f] * t(i, col + f);
            }
            s_src[i] = src;
            s_dst[i] = dst;
        }
        double* al = alpha.data() + h * slots;
        double* lg = logits.data() + h * slots;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t begin = graph.offsets[i], end = graph.offsets[i + 1];
            double top = -INFINITY;
            for (std::size_t k = begin; k < end; ++k) {
                const double z = s_src[i] + s_dst[graph.sources[k]];
                lg[k] = z > 0.0 ? z : slope_ * z;
                top = std::max(top, lg[k]);
            }
            double total = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                al[k] = std::exp(lg[k] - top);
                total += al[k];
            }
            for (std::size_t k = begin; k < end; ++k) {
                al[k] /= total;
                const auto src_row = t.row(graph.sources[k]);
                for (std::size_t f = 0; f < out_dim_; ++f) y(i, col + f) += al[k] * src_row[col + f];
            }
        }
    }
    if (cache) {
        cache->input = &x;
        cache->transformed = std::move(t);
        cache->alpha = std::move(alpha);
        cache->logits = std::move(logits);
    }
    return y;
}

Matrix GatLayer::backward(const Matrix& g, const Neighborhoods& graph, const Cache& cache, bool want_input_grad) {
    const Matrix& x = *cache.input;
    const Matrix& t = cache.transformed;
    const std::size_t n = x.rows();
    const std::size_t width = output_width();
    const std::size_t slots = graph.sources.size();
    if (g.rows() != n || g.cols() != width) throw ShapeMismatch("GAT output gradient shape");

    Matrix dt(n, width);
    std::vector<double> ds_src(n), ds_dst(n), dalpha;
    for (std::size_t h = 0; h < heads_; ++h) {
        const std::size_t col = h * out_dim_;
        const double* al = cache.alpha.data() + h * slots;
        const double* lg = cache.logits.data() + h * slots;
        const auto a = attention_.value.row(h);
        std::fill(ds_src.begin(), ds_src.end(), 0.0);
        std::fill(ds_dst.begin(), ds_dst.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t begin = graph.offsets[i], end = graph.offsets[i + 1];
            const auto gi = g.row(i);
            dalpha.assign(end - begin, 0.0);
            double weighted = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t j = graph.sources[k];
                const auto tj = t.row(j);
                auto dtj = dt.row(j);
                double d = 0.0;
                for (std::size_t f = 0; f < out_dim_; ++f) {
                    d += gi[col + f] * tj[col + f];
                    dtj[col + f] += al[k] * gi[col + f];
                }
                dalpha[k - begin] = d;
                weighted += al[k] * d;
            }
            for (std::size_t k = begin; k < end; ++k) {
                const double dlogit = al[k] * (dalpha[k - begin] - weighted);
                const double dz = lg[k] > 0.0 ? dlogit : slope_ * dlogit;
                ds_src[i] += dz;
                ds_dst[graph.sources[k]] += dz;
            }
        }
        auto da = attention_.grad.row(h);
        for (std::size_t i = 0; i < n; ++i) {
            auto dti = dt.row(i);
            const auto ti = t.row(i);
            for (std::size_t f = 0; f < out_dim_; ++f) {
                da[f] += ds_src[i] * ti[col + f];
                da[out_dim_ + f] += ds_dst[i] * ti[col + f];
                dti[col + f] += ds_src[i] * a[f] + ds_dst[i] * a[out_dim_ + f];
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        const auto dti = dt.row(i);
        for (std::size_t k = 0; k < in_dim_; ++k) {
            if (xi[k] == 0.0) continue;
            auto dw = weight_.grad.row(k);
            for (std::size_t c = 0; c < width; ++c) dw[c] += xi[k] * dti[c];
        }
    }
    if (!want_input_grad) return {};
    Matrix dx(n, in_dim_);
    for (std::size_t i = 0; i < n; ++i) {
        const auto dti = dt.row(i);
        for (std::size_t k = 0; k < in_dim_; ++k) {
            const auto w = weight_.value.row(k);
            double acc = 0.0;
            for (std::size_t c = 0; c < width; ++c) acc += dti[c] * w[c];
            dx(i, k) = acc;
        }
    }
    return dx;
}

std::vector<double> GatLayer::attention_coefficients(const Matrix& features, const Neighborhoods& graph,
                                                     std::size_t head) const {
    Cache cache;
    forward(features, graph, &cache);
    const std::size_t slots = graph.sources.size();
    return {cache.alpha.begin() + static_cast<std::ptrdiff_t>(head * slots),
            cache.alpha.begin() + static_cast<std::ptrdiff_t>((head + 1) * slots)};
}

Matrix gat_layer_forward(const GatLayer& layer, const Matrix& features, const EdgeList& edges) {
    return layer.forward(features, Neighborhoods::from_edges(features.rows(), edges));
}

namespace {

void glorot(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

}  // namespace

QNetwork::QNetwork(const NetworkShape& shape, std::uint64_t seed)
    : shape_(shape),
      layer1_("layer1", shape.input_width, shape.head_width, shape.heads, shape.leaky_slope),
      layer2_("layer2", shape.heads * shape.head_width, shape.action_types, 1, shape.leaky_slope) {
    Rng rng(seed);
    glorot(layer1_.weight().value, shape.input_width, shape.heads * shape.head_width, rng);
    glorot(layer1_.attention().value, shape.heads, 2 * shape.head_width, rng);
    glorot(layer2_.weight().value, shape.heads * shape.head_width, shape.action_types, rng);
    glorot(layer2_.attention().value, 1, 2 * shape.action_types, rng);
}

std::vector<Parameter*> QNetwork::parameters() {
    return {&layer1_.weight(), &layer1_.attention(), &layer2_.weight(), &layer2_.attention()};
}

std::vector<const Parameter*> QNetwork::parameters() const {
    return {&layer1_.weight(), &layer1_.attention(), &layer2_.weight(), &layer2_.attention()};
}

void QNetwork::zero_grad() {
    for (auto* p : parameters()) p->grad.fill(0.0);
}

Matrix QNetwork::forward(const VectorizedState& state, Cache* cache) const {
    return forward(state, Neighborhoods::from_edges(state.features.rows(), state.edges), cache);
}

Matrix QNetwork::forward(const VectorizedState& state, const Neighborhoods& graph, Cache* cache) const {
    if (state.features.cols() != shape_.input_width) {
        throw ShapeMismatch("feature width " + std::to_string(state.features.cols()) + " != network input " +
                            std::to_string(shape_.input_width));
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    c.hidden_pre = layer1_.forward(state.features, graph, cache ? &c.layer1 : nullptr);
    c.hidden = c.hidden_pre;
    for (double& v : c.hidden.values()) v = std::max(v, 0.0);
    return layer2_.forward(c.hidden, graph, cache ? &c.layer2 : nullptr);
}

void QNetwork::backward(const Matrix& grad_q, const Neighborhoods& graph, Cache& cache) {
    Matrix d_hidden = layer2_.backward(grad_q, graph, cache.layer2, true);
    const auto pre = cache.hidden_pre.values();
    auto d = d_hidden.values();
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (pre[k] <= 0.0) d[k] = 0.0;
    }
    layer1_.backward(d_hidden, graph, cache.layer1, false);
}

std::string QNetwork::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "drift-qnetwork/1";
    j["vocab_fingerprint"] = to_hex(vocab_fingerprint);
    j["input_width"] = shape_.input_width;
    j["heads"] = shape_.heads;
    j["head_width"] = shape_.head_width;
    j["action_types"] = shape_.action_types;
    j["leaky_slope"] = shape_.leaky_slope;
    auto blocks = nlohmann::ordered_json::array();
    for (const auto* p : parameters()) {
        nlohmann::ordered_json b;
        b["name"] = p->name;
        b["rows"] = p->value.rows();
        b["cols"] = p->value.cols();
        b["values"] = std::vector<double>(p->value.values().begin(), p->value.values().end());
        blocks.push_back(std::move(b));
    }
    j["blocks"] = std::move(blocks);
    return j.dump();
}

QNetwork QNetwork::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text.begin(), text.end());
        if (j.value("format", "") != "drift-qnetwork/1") throw IoError("unsupported checkpoint format");
        NetworkShape shape;
        shape.input_width = j.at("input_width").get<std::size_t>();
        shape.heads = j.at("heads").get<std::size_t>();
        shape.head_width = j.at("head_width").get<std::size_t>();
        shape.action_types = j.at("action_types").get<std::size_t>();
        shape.leaky_slope = j.at("leaky_slope").get<double>();
        QNetwork net(shape, 0);
        if (!parse_hex(j.at("vocab_fingerprint").get<std::string>(), net.vocab_fingerprint)) {
            throw IoError("bad vocabulary fingerprint");
        }
        auto params = net.parameters();
        const auto& blocks = j.at("blocks");
        if (blocks.size() != params.size()) throw IoError("checkpoint block count mismatch");
        for (std::size_t b = 0; b < params.size(); ++b) {
            const auto& bj = blocks[b];
            auto values = bj.at("values").get<std::vector<double>>();
            if (bj.at("name").get<std::string>() != params[b]->name ||
                bj.at("rows").get<std::size_t>() != params[b]->value.rows() ||
                bj.at("cols").get<std::size_t>() != params[b]->value.cols() || values.size() != params[b]->value.size()) {
                throw IoError("checkpoint block " + params[b]->name + " has the wrong shape");
            }
            std::copy(values.begin(), values.end(), params[b]->value.values().begin());
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
}

void QNetwork::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json() << '\n';
}

QNetwork QNetwork::load(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    QNetwork net = from_json(ss.str());
    if (net.vocab_fingerprint != vocab.fingerprint()) {
        throw FingerprintMismatch("checkpoint " + path + " was trained against vocabulary " +
                                  to_hex(net.vocab_fingerprint) + ", not " + to_hex(vocab.fingerprint()));
    }
    return net;
}

Matrix q_forward(const QNetwork& net, const VectorizedState& state) { return net.forward(state); }

double q_value(const Matrix& q, const VectorizedAction& action) {
    if (action.node_one_hot.size() != q.rows() || action.type_one_hot.size() != q.cols()) {
        throw ShapeMismatch("vectorized action does not match Q matrix");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        if (action.node_one_hot[i] == 0.0) continue;
        for (std::size_t e = 0; e < q.cols(); ++e) total += action.node_one_hot[i] * q(i, e) * action.type_one_hot[e];
    }
    return total;
}

namespace {

struct StateGroup {
    const VectorizedState* state;
    std::vector<std::size_t> samples;
};

std::vector<StateGroup> group_by_state(std::span<const QSample> batch) {
    std::vector<StateGroup> groups;
    std::unordered_map<const VectorizedState*, std::size_t> index;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        auto [it, inserted] = index.try_emplace(batch[k].state, groups.size());
        if (inserted) groups.push_back({batch[k].state, {}});
        groups[it->second].samples.push_back(k);
    }
    return groups;
}

double batch_loss(const QNetwork& net, std::span<const QSample> batch, std::span<const double> targets) {
    double loss = 0.0;
    for (const auto& group : group_by_state(batch)) {
        const Matrix q = net.forward(*group.state);
        for (std::size_t k : group.samples) {
            const double diff = q(batch[k].action.node, batch[k].action.type) - targets[k];
            loss += diff * diff;
        }
    }
    return loss / static_cast<double>(batch.size());
}

}  // namespace

double loss_and_gradients(QNetwork& net, std::span<const QSample> batch, std::span<const double> targets) {
    if (batch.empty()) throw ShapeMismatch("empty batch");
    if (batch.size() != targets.size()) throw ShapeMismatch("batch and targets differ in length");
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& group : group_by_state(batch)) {
        const auto graph = Neighborhoods::from_edges(group.state->features.rows(), group.state->edges);
        QNetwork::Cache cache;
        const Matrix q = net.forward(*group.state, graph, &cache);
        Matrix grad_q(q.rows(), q.cols());
        for (std::size_t k : group.samples) {
            const auto& a = batch[k].action;
            if (a.node >= q.rows() || a.type >= q.cols()) throw ShapeMismatch("action slot outside Q matrix");
            const double diff = q(a.node, a.type) - targets[k];
            loss += diff * diff;
            grad_q(a.node, a.type) += 2.0 * diff * scale;
        }
        net.backward(grad_q, graph, cache);
    }
    loss *= scale;
    if (!std::isfinite(loss)) throw NonFiniteLoss("loss is " + std::to_string(loss));
    return loss;
}

Adam::Adam(const QNetwork& net, AdamConfig config) : config_(config) {
    for (const auto* p : net.parameters()) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
    }
}

void Adam::step(QNetwork& net) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    auto params = net.parameters();
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto value = params[b]->value.values();
        auto grad = params[b]->grad.values();
        auto m = m_[b].values();
        auto v = v_[b].values();
        for (std::size_t k = 0; k < value.size(); ++k) {
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad[k];
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad[k] * grad[k];
            value[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
            grad[k] = 0.0;
        }
    }
}

GradientCheckReport gradient_check(QNetwork net, std::span<const QSample> batch, std::span<const double> targets,
                                   double step, double tolerance, const GradientCheckOptions& options) {
    net.zero_grad();
    loss_and_gradients(net, batch, targets);
    if (options.after_backward) options.after_backward(net);

    GradientCheckReport report;
    Rng rng(options.seed);
    for (auto* p : net.parameters()) {
        const std::size_t size = p->value.size();
        std::vector<std::size_t> coords(size);
        for (std::size_t k = 0; k < size; ++k) coords[k] = k;
        if (size > options.coordinates_per_block) {
            rng.shuffle(std::span(coords));
            coords.resize(options.coordinates_per_block);
        }
        GradientCheckReport::Block block{p->name, coords.size(), 0.0};
        for (std::size_t k : coords) {
            double& v = p->value.values()[k];
            const double original = v;
            v = original + step;
            const double plus = batch_loss(net, batch, targets);
            v = original - step;
            const double minus = batch_loss(net, batch, targets);
            v = original;
            const double numeric = (plus - minus) / (2.0 * step);
            const double analytic = p->grad.values()[k];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
            block.max_relative_error = std::max(block.max_relative_error, std::abs(analytic - numeric) / denom);
        }
        report.max_relative_error = std::max(report.max_relative_error, block.max_relative_error);
        report.blocks.push_back(block);
    }
    report.passed = report.max_relative_error < tolerance;
    return report;
}

}  // namespace drift
