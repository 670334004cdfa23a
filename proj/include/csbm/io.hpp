#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "csbm/errors.hpp"
#include "csbm/graph.hpp"
#include "csbm/sampling.hpp"

namespace csbm {

/// Result of reading an external graph. Isolated nodes are reported rather
/// than rejected; propagation operators refuse them later.
struct LoadedGraph {
    Graph graph;
    std::optional<Features> features;
    std::vector<std::size_t> isolated_nodes;
    /// original_labels[c - 1] is the label value remapped to class c.
    std::vector<long long> original_labels;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_csv_row(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                              : comma - start)));
        if (comma == std::string_view::npos)
            return out;
        start = comma + 1;
    }
}

template <class T>
bool parse_number(std::string_view s, T &out) {
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    const auto *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

inline std::ifstream open_input(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path, 0);
    return in;
}

} // namespace detail

/// Edge list: one edge per line as two whitespace-separated 0-based node
/// indices; blank lines and lines starting with '#' are skipped.
inline std::vector<Edge> read_edge_list(std::istream &in, std::size_t n_nodes) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        std::istringstream fields{std::string(t)};
        std::string a, b, extra;
        fields >> a >> b;
        std::size_t u = 0, v = 0;
        if (!detail::parse_number(a, u) || !detail::parse_number(b, v) || (fields >> extra))
            throw ParseError("malformed edge line '" + std::string(t) + "'", line_no);
        if (u >= n_nodes || v >= n_nodes)
            throw BoundsError("edge (" + std::to_string(u) + ", " + std::to_string(v)
                              + ") references a node outside 0.." + std::to_string(n_nodes - 1)
                              + " (line " + std::to_string(line_no) + ")");
        edges.emplace_back(u, v);
    }
    return edges;
}

/// Labels CSV with header "node,label". Returns remapped labels in 1..C
/// (sorted order of the original integer labels) and the original values.
inline std::pair<std::vector<int>, std::vector<long long>> read_labels(std::istream &in) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::map<std::size_t, long long> by_node;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto cells = detail::split_csv_row(t);
        if (!header_seen) {
            if (cells.size() != 2 || cells[0] != "node" || cells[1] != "label")
                throw ParseError("labels header must be 'node,label'", line_no);
            header_seen = true;
            continue;
        }
        std::size_t node = 0;
        long long label = 0;
        if (cells.size() != 2 || !detail::parse_number(cells[0], node)
            || !detail::parse_number(cells[1], label))
            throw ParseError("malformed labels row '" + std::string(t) + "'", line_no);
        if (!by_node.emplace(node, label).second)
            throw ParseError("duplicate label for node " + std::to_string(node), line_no);
    }
    if (!header_seen)
        throw ParseError("labels file is empty", 0);
    const std::size_t n = by_node.empty() ? 0 : by_node.rbegin()->first + 1;
    for (std::size_t v = 0; v < n; ++v)
        if (!by_node.contains(v))
            throw ParseError("labels file has no row for node " + std::to_string(v), 0);

    std::vector<long long> distinct;
    for (auto &[node, label] : by_node)
        distinct.push_back(label);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<int> labels(n);
    for (auto &[node, label] : by_node)
        labels[node] = static_cast<int>(
            std::lower_bound(distinct.begin(), distinct.end(), label) - distinct.begin() + 1);
    return {std::move(labels), std::move(distinct)};
}

/// Features CSV with header "node,f0,f1,...", one row per node.
inline Matrix read_features(std::istream &in, std::size_t n_nodes) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    Matrix m;
    std::vector<bool> seen(n_nodes, false);
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto cells = detail::split_csv_row(t);
        if (dim == 0) {
            if (cells.size() < 2 || cells[0] != "node")
                throw ParseError("features header must be 'node,f0,f1,...'", line_no);
            for (std::size_t k = 1; k < cells.size(); ++k)
                if (cells[k] != "f" + std::to_string(k - 1))
                    throw ParseError("features header column " + std::to_string(k)
                                         + " must be 'f" + std::to_string(k - 1) + "'",
                                     line_no);
            dim = cells.size() - 1;
            m = Matrix(n_nodes, dim);
            continue;
        }
        std::size_t node = 0;
        if (cells.size() != dim + 1 || !detail::parse_number(cells[0], node))
            throw ParseError("malformed features row", line_no);
        if (node >= n_nodes)
            throw BoundsError("features row for node " + std::to_string(node)
                              + " outside 0.." + std::to_string(n_nodes - 1) + " (line "
                              + std::to_string(line_no) + ")");
        if (seen[node])
            throw ParseError("duplicate features row for node " + std::to_string(node), line_no);
        seen[node] = true;
        for (std::size_t k = 0; k < dim; ++k)
            if (!detail::parse_number(cells[k + 1], m(node, k)))
                throw ParseError("non-numeric feature value '" + std::string(cells[k + 1]) + "'",
                                 line_no);
    }
    if (dim == 0)
        throw ParseError("features file is empty", 0);
    for (std::size_t v = 0; v < n_nodes; ++v)
        if (!seen[v])
            throw ParseError("features file has no row for node " + std::to_string(v), 0);
    return m;
}

/// Reads an external graph. The node count comes from the labels file; the
/// edge list is symmetrized with duplicates collapsed and self-loops dropped.
inline LoadedGraph load_graph(const std::string &edge_list_path, const std::string &labels_path,
                              const std::optional<std::string> &features_path = std::nullopt) {
    auto label_stream = detail::open_input(labels_path);
    auto [labels, originals] = read_labels(label_stream);
    const std::size_t n = labels.size();

    auto edge_stream = detail::open_input(edge_list_path);
    const auto edges = read_edge_list(edge_stream, n);

    LoadedGraph out;
    out.graph = Graph::from_edges(n, edges, std::move(labels));
    out.isolated_nodes = out.graph.isolated_nodes();
    out.original_labels = std::move(originals);
    if (features_path) {
        auto feature_stream = detail::open_input(*features_path);
        out.features = Features{read_features(feature_stream, n), std::nullopt};
    }
    return out;
}

} // namespace csbm
