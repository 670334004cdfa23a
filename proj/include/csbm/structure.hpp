#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "csbm/graph.hpp"
#include "csbm/rng.hpp"

namespace csbm {

inline constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

/// Hop distances from `root`, exploring at most `max_depth` hops; nodes not
/// reached get kUnreached.
inline std::vector<std::size_t> bfs_distances(const Graph &g, std::size_t root,
                                              std::size_t max_depth = kUnreached) {
    std::vector<std::size_t> dist(g.num_nodes(), kUnreached);
    std::deque<std::size_t> queue{root};
    dist[root] = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (dist[u] >= max_depth)
            continue;
        for (NodeId v : g.neighbors(u))
            if (dist[v] == kUnreached) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
    }
    return dist;
}

/// Shell sizes |Gamma_k| for k = 0..max_depth around `root`, using caller-owned
/// scratch so repeated calls cost only the explored region.
class ShellCounter {
public:
    explicit ShellCounter(const Graph &g) : graph_(&g), dist_(g.num_nodes(), kUnreached) {}

    std::vector<std::size_t> shells(std::size_t root, std::size_t max_depth) {
        std::vector<std::size_t> shell(max_depth + 1, 0);
        touched_.clear();
        touched_.push_back(root);
        dist_[root] = 0;
        for (std::size_t head = 0; head < touched_.size(); ++head) {
            const auto u = touched_[head];
            ++shell[dist_[u]];
            if (dist_[u] == max_depth)
                continue;
            for (NodeId v : graph_->neighbors(u))
                if (dist_[v] == kUnreached) {
                    dist_[v] = dist_[u] + 1;
                    touched_.push_back(v);
                }
        }
        for (auto v : touched_)
            dist_[v] = kUnreached;
        return shell;
    }

private:
    const Graph *graph_;
    std::vector<std::size_t> dist_;
    std::vector<std::size_t> touched_;
};

inline bool is_connected(const Graph &g) {
    if (g.num_nodes() == 0)
        return true;
    const auto dist = bfs_distances(g, 0);
    return std::none_of(dist.begin(), dist.end(), [](auto d) { return d == kUnreached; });
}

/// Two-colouring by parity BFS over every component.
inline bool is_bipartite(const Graph &g) {
    std::vector<int> colour(g.num_nodes(), -1);
    std::deque<std::size_t> queue;
    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
        if (colour[s] != -1)
            continue;
        colour[s] = 0;
        queue.push_back(s);
        while (!queue.empty()) {
            const auto u = queue.front();
            queue.pop_front();
            for (NodeId v : g.neighbors(u)) {
                if (colour[v] == -1) {
                    colour[v] = 1 - colour[u];
                    queue.push_back(v);
                } else if (colour[v] == colour[u]) {
                    return false;
                }
            }
        }
    }
    return true;
}

/// Neighbour-intersection scan over edges u < v: any common neighbour closes a triangle.
inline bool contains_triangle(const Graph &g) {
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
        auto nu = g.neighbors(u);
        for (NodeId v : nu) {
            if (v <= u)
                continue;
            auto nv = g.neighbors(v);
            auto a = nu.begin();
            auto b = nv.begin();
            while (a != nu.end() && b != nv.end()) {
                if (*a < *b)
                    ++a;
                else if (*b < *a)
                    ++b;
                else
                    return true;
            }
        }
    }
    return false;
}

struct NeighborhoodLevel {
    std::size_t k = 0;
    double mean_shell = 0.0;  // |Gamma_k|: nodes at distance exactly k
    std::size_t max_shell = 0;
    double mean_ball = 0.0;   // |N_k|: nodes at distance at most k
    std::size_t max_ball = 0;
};

struct NeighborhoodProfile {
    std::vector<NeighborhoodLevel> levels;  // k = 0..max_k
    std::size_t roots_used = 0;
    bool connected = true;
};

struct NeighborhoodOptions {
    /// Graphs above this size are profiled from a uniform sample of roots.
    std::size_t exact_limit = 2000;
    std::size_t sampled_roots = 100;
    std::uint64_t seed = 0;
};

/// Exact shell and ball sizes by BFS from every node (or a seeded root sample
/// on large graphs). On disconnected graphs the sizes are per component and
/// `connected` is false.
inline NeighborhoodProfile neighborhood_profile(const Graph &g, std::size_t max_k,
                                                const NeighborhoodOptions &opts = {}) {
    const std::size_t n = g.num_nodes();
    std::vector<std::size_t> roots;
    if (n <= opts.exact_limit) {
        roots.resize(n);
        for (std::size_t v = 0; v < n; ++v)
            roots[v] = v;
    } else {
        // Partial Fisher-Yates: first sampled_roots entries of a seeded permutation.
        std::vector<std::size_t> perm(n);
        for (std::size_t v = 0; v < n; ++v)
            perm[v] = v;
        Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(StreamTag::Roots)));
        const std::size_t take = std::min(opts.sampled_roots, n);
        for (std::size_t i = 0; i < take; ++i)
            std::swap(perm[i], perm[i + rng.below(n - i)]);
        roots.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
    }

    NeighborhoodProfile prof;
    prof.roots_used = roots.size();
    prof.connected = is_connected(g);
    prof.levels.resize(max_k + 1);
    std::vector<std::size_t> shell_sum(max_k + 1, 0), ball_sum(max_k + 1, 0);
    ShellCounter counter(g);
    for (std::size_t root : roots) {
        const auto shell = counter.shells(root, max_k);
        std::size_t ball = 0;
        for (std::size_t k = 0; k <= max_k; ++k) {
            ball += shell[k];
            auto &lvl = prof.levels[k];
            lvl.max_shell = std::max(lvl.max_shell, shell[k]);
            lvl.max_ball = std::max(lvl.max_ball, ball);
            shell_sum[k] += shell[k];
            ball_sum[k] += ball;
        }
    }
    for (std::size_t k = 0; k <= max_k; ++k) {
        auto &lvl = prof.levels[k];
        lvl.k = k;
        const double r = roots.empty() ? 1.0 : static_cast<double>(roots.size());
        lvl.mean_shell = static_cast<double>(shell_sum[k]) / r;
        lvl.mean_ball = static_cast<double>(ball_sum[k]) / r;
    }
    return prof;
}

} // namespace csbm
