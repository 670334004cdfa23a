#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csbm/errors.hpp"

namespace csbm {

using NodeId = std::uint32_t;
using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected, unweighted, simple graph in compressed sparse row form with
/// per-node class labels in 1..C. Immutable after construction.
class Graph {
public:
    Graph() = default;

    /// Builds the symmetric closure of `edges`, dropping self-loops and
    /// collapsing duplicates. Labels default to class 1 for every node.
    static Graph from_edges(std::size_t n_nodes, std::span<const Edge> edges,
                            std::vector<int> labels = {}) {
        if (labels.empty())
            labels.assign(n_nodes, 1);
        if (labels.size() != n_nodes)
            throw InvalidArgument("label vector length " + std::to_string(labels.size())
                                  + " does not match node count " + std::to_string(n_nodes));

        std::vector<std::pair<NodeId, NodeId>> arcs;
        arcs.reserve(2 * edges.size());
        for (auto [u, v] : edges) {
            if (u >= n_nodes || v >= n_nodes)
                throw BoundsError("edge (" + std::to_string(u) + ", " + std::to_string(v)
                                  + ") out of range for " + std::to_string(n_nodes) + " nodes");
            if (u == v)
                continue;
            arcs.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
            arcs.emplace_back(static_cast<NodeId>(v), static_cast<NodeId>(u));
        }
        std::sort(arcs.begin(), arcs.end());
        arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

        Graph g;
        g.offsets_.assign(n_nodes + 1, 0);
        for (auto [u, v] : arcs)
            ++g.offsets_[u + 1];
        std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
        g.targets_.resize(arcs.size());
        for (std::size_t k = 0; k < arcs.size(); ++k)
            g.targets_[k] = arcs[k].second;

        int max_label = 0;
        for (int l : labels) {
            if (l < 1)
                throw InvalidArgument("labels must be positive class indices");
            max_label = std::max(max_label, l);
        }
        g.labels_ = std::move(labels);
        g.num_classes_ = max_label;
        return g;
    }

    std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_edges() const noexcept { return targets_.size() / 2; }

    std::span<const NodeId> neighbors(std::size_t v) const noexcept {
        return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::size_t degree(std::size_t v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

    std::vector<std::size_t> degrees() const {
        std::vector<std::size_t> d(num_nodes());
        for (std::size_t v = 0; v < d.size(); ++v)
            d[v] = degree(v);
        return d;
    }

    bool has_edge(std::size_t u, std::size_t v) const noexcept {
        auto nb = neighbors(u);
        return std::binary_search(nb.begin(), nb.end(), static_cast<NodeId>(v));
    }

    std::span<const int> labels() const noexcept { return labels_; }
    int label(std::size_t v) const noexcept { return labels_[v]; }
    int num_classes() const noexcept { return num_classes_; }

    std::vector<std::size_t> isolated_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t v = 0; v < num_nodes(); ++v)
            if (degree(v) == 0)
                out.push_back(v);
        return out;
    }

    /// Throws DegenerateGraphError naming the first isolated node.
    void require_no_isolated() const {
        for (std::size_t v = 0; v < num_nodes(); ++v)
            if (degree(v) == 0)
                throw DegenerateGraphError(v);
    }

    std::vector<Edge> edge_list() const {
        std::vector<Edge> out;
        out.reserve(num_edges());
        for (std::size_t u = 0; u < num_nodes(); ++u)
            for (NodeId v : neighbors(u))
                if (u < v)
                    out.emplace_back(u, v);
        return out;
    }

    bool operator==(const Graph &) const = default;

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> targets_;
    std::vector<int> labels_;
    int num_classes_ = 0;
};

/// Small deterministic graphs used by tests, the CLI fixtures and the
/// counterexample search.
namespace families {

inline Graph star(std::size_t leaves) {
    std::vector<Edge> e;
    for (std::size_t i = 1; i <= leaves; ++i)
        e.emplace_back(0, i);
    return Graph::from_edges(leaves + 1, e);
}

inline Graph path(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i)
        e.emplace_back(i, i + 1);
    return Graph::from_edges(n, e);
}

inline Graph cycle(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
        e.emplace_back(i, (i + 1) % n);
    return Graph::from_edges(n, e);
}

inline Graph complete(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            e.emplace_back(i, j);
    return Graph::from_edges(n, e);
}

/// Circulant graph: i ~ i +- s for s = 1..half_degree; regular of degree 2*half_degree.
inline Graph circulant(std::size_t n, std::size_t half_degree) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 1; s <= half_degree; ++s)
            e.emplace_back(i, (i + s) % n);
    return Graph::from_edges(n, e);
}

/// Triangle {0,1,2} plus pendant node 3 attached to 0; degrees (3,2,2,1).
inline Graph triangle_with_pendant() {
    const std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}, {0, 3}};
    return Graph::from_edges(4, e);
}

} // namespace families

} // namespace csbm
