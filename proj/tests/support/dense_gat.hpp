#pragma once

#include <cmath>
#include <vector>

#include "drift/featurize.hpp"
#include "drift/nn.hpp"

namespace drift::testing {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const Matrix& m) {
    Dense out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

/// n×n mask: mask[i][j] is true when j feeds i (j == i or an edge j → i).
inline std::vector<std::vector<bool>> attention_mask(std::size_t n, const EdgeList& edges) {
    std::vector<std::vector<bool>> mask(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) mask[i][i] = true;
    for (const auto& [src, dst] : edges) mask[static_cast<std::size_t>(dst)][static_cast<std::size_t>(src)] = true;
    return mask;
}

/// Straightforward O(n²) masked attention, one head at a time, written
/// without any of the library's sparse bookkeeping.
inline Dense dense_gat(const Dense& x, const EdgeList& edges, const Matrix& weight, const Matrix& attention,
                       std::size_t heads, std::size_t out_dim, double slope) {
    const std::size_t n = x.size();
    const auto mask = attention_mask(n, edges);
    Dense y(n, std::vector<double>(heads * out_dim, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
        Dense hx(n, std::vector<double>(out_dim, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t f = 0; f < out_dim; ++f)
                for (std::size_t k = 0; k < x[i].size(); ++k) hx[i][f] += x[i][k] * weight(k, h * out_dim + f);

        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> e(n, -INFINITY);
            double top = -INFINITY;
            for (std::size_t j = 0; j < n; ++j) {
                if (!mask[i][j]) continue;
                double z = 0.0;
                for (std::size_t f = 0; f < out_dim; ++f) z += attention(h, f) * hx[i][f] + attention(h, out_dim + f) * hx[j][f];
                e[j] = z > 0 ? z : slope * z;
                top = std::max(top, e[j]);
            }
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) total += mask[i][j] ? std::exp(e[j] - top) : 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!mask[i][j]) continue;
                const double a = std::exp(e[j] - top) / total;
                for (std::size_t f = 0; f < out_dim; ++f) y[i][h * out_dim + f] += a * hx[j][f];
            }
        }
    }
    return y;
}

inline Dense dense_q(const QNetwork& net, const VectorizedState& s) {
    const auto& l1 = net.layer1();
    const auto& l2 = net.layer2();
    Dense hidden = dense_gat(to_dense(s.features), s.edges, l1.weight().value, l1.attention().value, l1.heads(),
                             l1.out_dim(), l1.leaky_slope());
    for (auto& row : hidden)
        for (double& v : row) v = std::max(v, 0.0);
    return dense_gat(hidden, s.edges, l2.weight().value, l2.attention().value, l2.heads(), l2.out_dim(),
                     l2.leaky_slope());
}

}  // namespace drift::testing
