#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csbm/errors.hpp"
#include "csbm/graph.hpp"
#include "csbm/matrix.hpp"
#include "csbm/parallel.hpp"

namespace csbm {

enum class OperatorKind { RandomWalk, Symmetric, Ppnp, Appnp };

/// Message-passing scheme. alpha is the teleportation probability for
/// Ppnp/Appnp and truncation the number of series terms K kept by Ppnp.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::RandomWalk;
    double alpha = 0.1;
    std::size_t truncation = 10;
    bool terminal_relu = false;

    static OperatorSpec random_walk() { return {}; }
    static OperatorSpec symmetric() { return {OperatorKind::Symmetric}; }
    static OperatorSpec ppnp(double alpha, std::size_t truncation) {
        return {OperatorKind::Ppnp, alpha, truncation};
    }
    static OperatorSpec appnp(double alpha) { return {OperatorKind::Appnp, alpha}; }

    OperatorSpec with_relu(bool on = true) const {
        OperatorSpec s = *this;
        s.terminal_relu = on;
        return s;
    }

    bool is_linear() const noexcept { return !terminal_relu; }

    // Appnp admits alpha = 0 (it reduces to the random walk); the Ppnp series needs alpha > 0.
    void validate() const {
        if (kind == OperatorKind::Ppnp) {
            if (!(alpha > 0.0 && alpha <= 1.0))
                throw InvalidArgument("ppnp alpha must lie in (0, 1]");
            if (truncation < 1)
                throw InvalidArgument("ppnp truncation K must be >= 1");
        }
        if (kind == OperatorKind::Appnp && !(alpha >= 0.0 && alpha <= 1.0))
            throw InvalidArgument("appnp alpha must lie in [0, 1]");
    }

    /// Stable identifier used in CSV output, e.g. "appnp:alpha=0.1+relu".
    std::string name() const;

    bool operator==(const OperatorSpec &) const = default;
};

namespace detail {
inline std::string short_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}
} // namespace detail

inline std::string OperatorSpec::name() const {
    std::string s;
    switch (kind) {
    case OperatorKind::RandomWalk: s = "random_walk"; break;
    case OperatorKind::Symmetric: s = "symmetric"; break;
    case OperatorKind::Ppnp:
        s = "ppnp:alpha=" + detail::short_double(alpha) + ":K=" + std::to_string(truncation);
        break;
    case OperatorKind::Appnp: s = "appnp:alpha=" + detail::short_double(alpha); break;
    }
    if (terminal_relu)
        s += "+relu";
    return s;
}

/// Node representations after `depth` applications of `op`.
struct NodeRepresentations {
    Matrix matrix;
    std::size_t depth = 0;
    OperatorSpec op;
};

namespace detail {

inline void require_rows(const Graph &g, const Matrix &h) {
    if (h.rows() != g.num_nodes())
        throw InvalidArgument("representation has " + std::to_string(h.rows())
                              + " rows but the graph has " + std::to_string(g.num_nodes())
                              + " nodes");
}

} // namespace detail

/// One random-walk convolution D^{-1} A H: each output row is the mean of the
/// neighbouring input rows.
inline Matrix rw_step(const Graph &g, const Matrix &h) {
    detail::require_rows(g, h);
    g.require_no_isolated();
    const std::size_t d = h.cols();
    Matrix out(h.rows(), d);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        auto dst = out.row(i);
        for (NodeId j : g.neighbors(i)) {
            auto src = h.row(j);
            for (std::size_t c = 0; c < d; ++c)
                dst[c] += src[c];
        }
        const double inv = 1.0 / static_cast<double>(g.degree(i));
        for (double &x : dst)
            x *= inv;
    }
    return out;
}

/// One symmetric convolution D^{-1/2} A D^{-1/2} H.
inline Matrix sym_step(const Graph &g, const Matrix &h) {
    detail::require_rows(g, h);
    g.require_no_isolated();
    std::vector<double> inv_sqrt(g.num_nodes());
    for (std::size_t i = 0; i < inv_sqrt.size(); ++i)
        inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));

    const std::size_t d = h.cols();
    Matrix out(h.rows(), d);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        auto dst = out.row(i);
        for (NodeId j : g.neighbors(i)) {
            auto src = h.row(j);
            const double w = inv_sqrt[i] * inv_sqrt[j];
            for (std::size_t c = 0; c < d; ++c)
                dst[c] += w * src[c];
        }
    }
    return out;
}

/// (1 - alpha) D^{-1} A H + alpha X.
inline Matrix appnp_step(const Graph &g, const Matrix &h, const Matrix &x, double alpha) {
    require_same_shape(h, x);
    return axpby(1.0 - alpha, rw_step(g, h), alpha, x);
}

struct PpnpResult {
    Matrix matrix;
    /// (1 - alpha)^{K+1}: series mass dropped by the truncation.
    double tail_bound = 0.0;
};

/// alpha * sum_{k=0}^{K} (1 - alpha)^k (D^{-1} A)^k X by Horner accumulation.
inline PpnpResult ppnp(const Graph &g, const Matrix &x, double alpha, std::size_t truncation) {
    OperatorSpec::ppnp(alpha, truncation).validate();
    Matrix s = x;
    for (std::size_t k = 0; k < truncation; ++k)
        s = axpby(1.0, x, 1.0 - alpha, rw_step(g, s));
    for (double &v : s.values())
        v *= alpha;
    return {std::move(s), std::pow(1.0 - alpha, static_cast<double>(truncation + 1))};
}

inline void relu_in_place(Matrix &m) {
    for (double &v : m.values())
        v = std::max(v, 0.0);
}

/// Incremental propagation: depth n+1 reuses depth n. Ppnp ignores depth and
/// jumps straight to the truncated series at depth >= 1.
class Propagator {
public:
    Propagator(const Graph &g, const Matrix &x, OperatorSpec op)
        : graph_(&g), input_(x), current_(x), op_(op) {
        op_.validate();
        detail::require_rows(g, x);
    }

    void advance() {
        switch (op_.kind) {
        case OperatorKind::RandomWalk: current_ = rw_step(*graph_, current_); break;
        case OperatorKind::Symmetric: current_ = sym_step(*graph_, current_); break;
        case OperatorKind::Appnp:
            current_ = appnp_step(*graph_, current_, input_, op_.alpha);
            break;
        case OperatorKind::Ppnp:
            if (depth_ == 0)
                current_ = ppnp(*graph_, input_, op_.alpha, op_.truncation).matrix;
            break;
        }
        ++depth_;
    }

    std::size_t depth() const noexcept { return depth_; }

    /// Linear representation at the current depth (no ReLU).
    const Matrix &linear() const noexcept { return current_; }

    /// Representation with the terminal ReLU applied when the operator asks for it.
    NodeRepresentations output() const {
        NodeRepresentations r{current_, depth_, op_};
        if (op_.terminal_relu)
            relu_in_place(r.matrix);
        return r;
    }

private:
    const Graph *graph_;
    Matrix input_;
    Matrix current_;
    OperatorSpec op_;
    std::size_t depth_ = 0;
};

/// Applies `op` n times to X (the terminal ReLU, if any, once at the end).
inline NodeRepresentations propagate(const Graph &g, const Matrix &x, const OperatorSpec &op,
                                     std::size_t n) {
    Propagator prop(g, x, op);
    for (std::size_t k = 0; k < n; ++k)
        prop.advance();
    return prop.output();
}

/// Per-node variances sigma2 * sum_j (M_ij)^2 of the depth-n linear operator M.
struct VarianceProfile {
    std::vector<double> per_node;
    std::size_t depth = 0;
    double sigma2_input = 1.0;

    double mean() const {
        CompensatedSum s;
        for (double v : per_node)
            s.add(v);
        return per_node.empty() ? 0.0 : s.value() / static_cast<double>(per_node.size());
    }
};

struct ProfileOptions {
    std::size_t max_nodes = 5000;
    std::size_t block_columns = 64;
    std::size_t workers = 1;
};

/// Exact variance profiles for depths 0..n_max, obtained by propagating the
/// identity basis in column blocks and accumulating squared row norms.
/// Results do not depend on the worker count.
inline std::vector<VarianceProfile> exact_variance_profiles(const Graph &g, const OperatorSpec &op,
                                                            std::size_t n_max, double sigma2,
                                                            const ProfileOptions &opts = {}) {
    op.validate();
    if (!op.is_linear())
        throw InvalidArgument("variance profile is defined for linear operators only");
    const std::size_t n = g.num_nodes();
    if (n > opts.max_nodes)
        throw ResourceError("exact variance profile refused for " + std::to_string(n)
                            + " nodes (cap " + std::to_string(opts.max_nodes)
                            + "); use monte_carlo_moments instead");
    g.require_no_isolated();

    const std::size_t width = std::max<std::size_t>(1, opts.block_columns);
    const std::size_t blocks = (n + width - 1) / width;
    const std::size_t group = std::max<std::size_t>(1, opts.workers);
    std::vector<CompensatedSum> totals((n_max + 1) * n);
    // partial[slot][depth * n + i]: sum of squares of row i restricted to one block.
    std::vector<std::vector<double>> partial(group);

    for (std::size_t first = 0; first < blocks; first += group) {
        const std::size_t count = std::min(group, blocks - first);
        parallel_for_index(count, opts.workers, [&](std::size_t slot) {
            const std::size_t c0 = (first + slot) * width;
            const std::size_t c1 = std::min(n, c0 + width);
            Matrix basis(n, c1 - c0);
            for (std::size_t c = c0; c < c1; ++c)
                basis(c, c - c0) = 1.0;

            auto &acc = partial[slot];
            acc.assign((n_max + 1) * n, 0.0);
            Propagator prop(g, basis, op);
            for (std::size_t depth = 0; depth <= n_max; ++depth) {
                if (depth > 0)
                    prop.advance();
                const Matrix &m = prop.linear();
                for (std::size_t i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (double v : m.row(i))
                        s += v * v;
                    acc[depth * n + i] = s;
                }
            }
        });
        // Block order is fixed, so the reduction is independent of the worker count.
        for (std::size_t slot = 0; slot < count; ++slot)
            for (std::size_t k = 0; k < totals.size(); ++k)
                totals[k].add(partial[slot][k]);
    }

    std::vector<VarianceProfile> out(n_max + 1);
    for (std::size_t depth = 0; depth <= n_max; ++depth) {
        auto &prof = out[depth];
        prof.depth = depth;
        prof.sigma2_input = sigma2;
        prof.per_node.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            prof.per_node[i] = sigma2 * totals[depth * n + i].value();
    }
    return out;
}

inline VarianceProfile exact_variance_profile(const Graph &g, const OperatorSpec &op,
                                              std::size_t n, double sigma2,
                                              const ProfileOptions &opts = {}) {
    return std::move(exact_variance_profiles(g, op, n, sigma2, opts).back());
}

} // namespace csbm
