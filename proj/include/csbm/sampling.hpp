#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "csbm/graph.hpp"
#include "csbm/matrix.hpp"
#include "csbm/params.hpp"
#include "csbm/rng.hpp"

namespace csbm {

/// Node feature matrix plus the generative class means when it was sampled.
struct Features {
    Matrix matrix;
    std::optional<std::pair<double, double>> class_means;
};

namespace detail {

// Number of failures before the next success of a Bernoulli(prob) sequence,
// capped at `cap` so that astronomically long skips stay representable.
inline double geometric_skip(Rng &rng, double log_fail, double cap) {
    const double skip = std::floor(std::log1p(-rng.uniform()) / log_fail);
    return skip < cap ? skip : cap;
}

// All pairs (offset+w, offset+v) with w < v < m of one diagonal block, each
// kept independently with probability prob (Batagelj-Brandes skipping).
inline void sample_within_block(std::size_t offset, std::size_t m, double prob, Rng &rng,
                                std::vector<Edge> &out) {
    if (prob <= 0.0 || m < 2)
        return;
    if (prob >= 1.0) {
        for (std::size_t v = 1; v < m; ++v)
            for (std::size_t w = 0; w < v; ++w)
                out.emplace_back(offset + w, offset + v);
        return;
    }
    const double log_fail = std::log1p(-prob);
    const double total = static_cast<double>(m) * static_cast<double>(m);
    std::size_t v = 1;
    double w = -1.0;
    while (v < m) {
        w += 1.0 + geometric_skip(rng, log_fail, total);
        while (w >= static_cast<double>(v) && v < m) {
            w -= static_cast<double>(v);
            ++v;
        }
        if (v < m)
            out.emplace_back(offset + static_cast<std::size_t>(w), offset + v);
    }
}

// All pairs (row_offset+i, col_offset+j), i < rows, j < cols, kept with probability prob.
inline void sample_cross_block(std::size_t row_offset, std::size_t rows, std::size_t col_offset,
                               std::size_t cols, double prob, Rng &rng, std::vector<Edge> &out) {
    if (prob <= 0.0 || rows == 0 || cols == 0)
        return;
    const std::size_t total = rows * cols;
    if (prob >= 1.0) {
        for (std::size_t k = 0; k < total; ++k)
            out.emplace_back(row_offset + k / cols, col_offset + k % cols);
        return;
    }
    const double log_fail = std::log1p(-prob);
    double k = -1.0;
    for (;;) {
        k += 1.0 + geometric_skip(rng, log_fail, static_cast<double>(total));
        if (k >= static_cast<double>(total))
            break;
        const auto idx = static_cast<std::size_t>(k);
        out.emplace_back(row_offset + idx / cols, col_offset + idx % cols);
    }
}

} // namespace detail

/// Class labels of the sampled model: 1 on [0, N/2), 2 on [N/2, N).
inline std::vector<int> csbm_labels(const CsbmParams &params) {
    std::vector<int> labels(params.n_nodes, 1);
    for (std::size_t v = params.class_size(); v < params.n_nodes; ++v)
        labels[v] = 2;
    return labels;
}

/// Draws one CSBM graph. Deterministic in (params.seed, trial_index).
/// Isolated nodes are left in place; propagation rejects such graphs.
inline Graph sample_graph(const CsbmParams &params, std::uint64_t trial_index) {
    params.validate();
    Rng rng(stream_seed(params.seed, trial_index, StreamTag::Graph));
    const std::size_t m = params.class_size();

    std::vector<Edge> edges;
    const double expected = params.mean_degree() * static_cast<double>(params.n_nodes) / 2.0;
    edges.reserve(static_cast<std::size_t>(expected * 1.1) + 16);

    detail::sample_within_block(0, m, params.p_intra, rng, edges);
    detail::sample_within_block(m, m, params.p_intra, rng, edges);
    detail::sample_cross_block(0, m, m, m, params.q_inter, rng, edges);
    return Graph::from_edges(params.n_nodes, edges, csbm_labels(params));
}

/// Gaussian features: node v of class i gets feature_dim iid Normal(mu_i, sigma2) draws.
/// `tag` selects an independent stream; the default is the canonical feature draw.
inline Features sample_features(const CsbmParams &params, std::span<const int> labels,
                                std::uint64_t trial_index,
                                StreamTag tag = StreamTag::Features) {
    params.validate();
    if (labels.size() != params.n_nodes)
        throw InvalidArgument("labels length does not match n_nodes");
    Rng rng(stream_seed(params.seed, trial_index, tag));
    const double sd = params.sigma();

    Features f{Matrix(params.n_nodes, params.feature_dim), std::pair{params.mu1, params.mu2}};
    for (std::size_t v = 0; v < params.n_nodes; ++v) {
        const double mean = labels[v] == 1 ? params.mu1 : params.mu2;
        for (double &x : f.matrix.row(v))
            x = rng.normal(mean, sd);
    }
    return f;
}

} // namespace csbm
