#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csbm/empirics.hpp"
#include "csbm/errors.hpp"
#include "csbm/graph.hpp"
#include "csbm/params.hpp"
#include "csbm/propagation.hpp"
#include "csbm/rng.hpp"
#include "csbm/sampling.hpp"
#include "csbm/structure.hpp"
#include "csbm/theory.hpp"

namespace csbm {

enum class Statement {
    MeanGap,
    VarianceBounds,
    DegreeConcentration,
    NeighborhoodBound,
    VarianceLimit,
    SymMonotone,
    ReluNoGain,
};

inline const char *to_string(Statement s) {
    switch (s) {
    case Statement::MeanGap: return "MeanGap";
    case Statement::VarianceBounds: return "VarianceBounds";
    case Statement::DegreeConcentration: return "DegreeConcentration";
    case Statement::NeighborhoodBound: return "NeighborhoodBound";
    case Statement::VarianceLimit: return "VarianceLimit";
    case Statement::SymMonotone: return "SymMonotone";
    case Statement::ReluNoGain: return "ReluNoGain";
    }
    return "?";
}

inline Statement parse_statement(const std::string &name) {
    for (auto s : {Statement::MeanGap, Statement::VarianceBounds, Statement::DegreeConcentration,
                   Statement::NeighborhoodBound, Statement::VarianceLimit, Statement::SymMonotone,
                   Statement::ReluNoGain})
        if (name == to_string(s))
            return s;
    throw InvalidArgument("unknown statement '" + name
                          + "' (expected MeanGap, VarianceBounds, DegreeConcentration, "
                            "NeighborhoodBound, VarianceLimit, SymMonotone or ReluNoGain)");
}

/// Statements that need a CSBM generator rather than a fixed graph.
inline bool needs_generator(Statement s) {
    return s != Statement::VarianceLimit && s != Statement::SymMonotone;
}

struct VerifyOptions {
    std::size_t trials = 20;
    std::size_t workers = 1;
    ConcentrationConfig concentration;
    /// Depth range 1..max_depth for MeanGap and VarianceBounds.
    std::size_t max_depth = 8;
    /// Ball depths 1..neighborhood_depth checked by NeighborhoodBound.
    std::size_t neighborhood_depth = 1;
    std::size_t limit_depth = 200;
    double limit_tolerance = 1e-6;
    std::size_t sym_graphs = 50;
    std::size_t sym_max_nodes = 50;
    std::size_t sym_depths = 10;
    double increase_tolerance = 1e-12;
    /// Propagation depth for ReluNoGain.
    std::size_t relu_depth = 1;
    DecisionRule rule = DecisionRule::PopulationMidpoint;
    SplitFractions split;
    /// Required pass_fraction for the fraction-based statements.
    double pass_threshold = 0.99;
};

struct VerificationReport {
    Statement statement = Statement::MeanGap;
    std::size_t trials = 0;
    double pass_fraction = 0.0;
    double worst_deviation = 0.0;
    /// NaN where no constant applies.
    double implied_constant = std::numeric_limits<double>::quiet_NaN();
    /// The value the pass rule compares against.
    double threshold = 0.0;
    /// Human-readable pass rule.
    std::string criterion;
    bool passed = false;
    std::size_t degenerate_trials = 0;
    /// Statement-specific diagnostics in a fixed order.
    std::vector<std::pair<std::string, double>> details;
};

namespace detail {

inline VerificationReport verify_mean_gap(const CsbmParams &params, const VerifyOptions &o) {
    const std::size_t k_max = o.concentration.horizon_K;
    MomentOptions mo;
    mo.workers = o.workers;
    mo.paired_draw = false;
    const auto mc = monte_carlo_moments(params, OperatorSpec::random_walk(), k_max, o.trials, mo);
    const double scale = std::sqrt(static_cast<double>(params.n_nodes) * (params.p_intra + params.q_inter));
    const double radius = mean_gap_error(params, o.concentration);

    VerificationReport r;
    r.statement = Statement::MeanGap;
    r.trials = o.trials;
    r.degenerate_trials = mc.degenerate_trials;
    std::size_t inside = 0, total = 0;
    double worst = 0.0;
    for (const auto &trial : mc.per_trial_gap)
        for (std::size_t k = 1; k <= k_max; ++k) {
            const double dev = std::abs(trial[k] - mean_gap(params, k));
            worst = std::max(worst, dev);
            inside += dev <= radius;
            ++total;
        }
    r.pass_fraction = total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
    r.worst_deviation = worst;
    r.implied_constant = worst * scale;
    r.threshold = o.concentration.constant_C;
    r.criterion = "implied_constant <= C";
    r.passed = total > 0 && r.implied_constant <= r.threshold;

    // Geometric-mean contraction of the trial-averaged gap over layers 1..K.
    const double g0 = mc.rows.front().gap.mean;
    const double gk = mc.rows.back().gap.mean;
    r.details.emplace_back("mean_contraction_ratio",
                           std::pow(gk / g0, 1.0 / static_cast<double>(k_max)));
    r.details.emplace_back("theory_ratio", mixing_ratio(params));
    for (std::size_t k = 1; k <= k_max; ++k)
        r.details.emplace_back("ratio_" + std::to_string(k),
                               mc.rows[k].gap.mean / mc.rows[k - 1].gap.mean);
    return r;
}

inline VerificationReport verify_variance_bounds(const CsbmParams &params, const VerifyOptions &o) {
    const std::size_t n_max = o.max_depth;
    MomentOptions mo;
    mo.workers = o.workers;
    const auto mc = monte_carlo_moments(params, OperatorSpec::random_walk(), n_max, o.trials, mo);

    std::vector<VarianceBounds> band(n_max + 1);
    for (std::size_t n = 1; n <= n_max; ++n)
        band[n] = variance_bounds(params, n);

    auto outside = [&](double v, std::size_t n) {
        if (v < band[n].lower)
            return band[n].lower - v;
        if (v > band[n].upper)
            return v - band[n].upper;
        return 0.0;
    };

    VerificationReport r;
    r.statement = Statement::VarianceBounds;
    r.trials = o.trials;
    r.degenerate_trials = mc.degenerate_trials;
    std::size_t inside = 0, node_inside = 0, total = 0;
    std::vector<std::size_t> inside_at(n_max + 1, 0);
    for (std::size_t t = 0; t < mc.per_trial_pooled_var.size(); ++t)
        for (std::size_t n = 1; n <= n_max; ++n) {
            const double dev = outside(mc.per_trial_pooled_var[t][n], n);
            r.worst_deviation = std::max(r.worst_deviation, dev);
            inside += dev == 0.0;
            inside_at[n] += dev == 0.0;
            node_inside += outside(mc.per_trial_node_var[t][n], n) == 0.0;
            ++total;
        }
    const double denom = static_cast<double>(std::max<std::size_t>(total, 1));
    r.pass_fraction = static_cast<double>(inside) / denom;
    r.threshold = o.pass_threshold;
    r.criterion = "pass_fraction >= threshold";
    r.passed = total > 0 && r.pass_fraction >= r.threshold;
    r.details.emplace_back("node_variance_pass_fraction", static_cast<double>(node_inside) / denom);
    const double used = static_cast<double>(std::max<std::size_t>(mc.per_trial_pooled_var.size(), 1));
    for (std::size_t n = 1; n <= n_max; ++n) {
        const std::string k = std::to_string(n);
        r.details.emplace_back("pass_fraction_" + k, static_cast<double>(inside_at[n]) / used);
        r.details.emplace_back("pooled_var_" + k, mc.rows[n].pooled_var.mean);
        r.details.emplace_back("node_var_" + k, mc.rows[n].node_var.mean);
        r.details.emplace_back("lower_" + k, band[n].lower);
        r.details.emplace_back("upper_" + k, band[n].upper);
    }
    return r;
}

inline VerificationReport verify_degrees(const CsbmParams &params, const VerifyOptions &o) {
    const double dbar = params.mean_degree();
    std::vector<std::pair<std::size_t, double>> per_trial(o.trials);
    parallel_for_index(o.trials, o.workers, [&](std::size_t t) {
        const Graph g = sample_graph(params, t);
        std::size_t ok = 0;
        double worst = 0.0;
        for (std::size_t v = 0; v < g.num_nodes(); ++v) {
            const double d = static_cast<double>(g.degree(v));
            ok += d >= dbar / 2.0 && d <= 1.5 * dbar;
            worst = std::max(worst, std::abs(d - dbar) / dbar);
        }
        per_trial[t] = {ok, worst};
    });

    VerificationReport r;
    r.statement = Statement::DegreeConcentration;
    r.trials = o.trials;
    std::size_t ok = 0, all_ok = 0;
    for (const auto &[count, worst] : per_trial) {
        ok += count;
        all_ok += count == params.n_nodes;
        r.worst_deviation = std::max(r.worst_deviation, worst);
    }
    r.pass_fraction = static_cast<double>(ok)
                      / static_cast<double>(std::max<std::size_t>(o.trials * params.n_nodes, 1));
    r.threshold = o.pass_threshold;
    r.criterion = "pass_fraction >= threshold";
    r.passed = o.trials > 0 && r.pass_fraction >= r.threshold;
    r.details.emplace_back("expected_degree", dbar);
    r.details.emplace_back("graphs_with_all_degrees_inside",
                           static_cast<double>(all_ok) / static_cast<double>(std::max<std::size_t>(o.trials, 1)));
    r.details.emplace_back("degree_over_log_n", dbar / std::log(static_cast<double>(params.n_nodes)));
    return r;
}

inline VerificationReport verify_neighborhoods(const CsbmParams &params, const VerifyOptions &o) {
    const std::size_t depth = std::max<std::size_t>(1, o.neighborhood_depth);
    // worst[t] = max over nodes and depths of |N_n| / bound(n); max_ball[t][n].
    std::vector<double> worst(o.trials, 0.0);
    std::vector<std::vector<double>> max_ball(o.trials);
    parallel_for_index(o.trials, o.workers, [&](std::size_t t) {
        const Graph g = sample_graph(params, t);
        NeighborhoodOptions no;
        no.exact_limit = params.n_nodes;
        no.seed = stream_seed(params.seed, t, StreamTag::Roots);
        const auto prof = neighborhood_profile(g, depth, no);
        max_ball[t].resize(depth + 1);
        for (std::size_t n = 1; n <= depth; ++n) {
            const double ball = static_cast<double>(prof.levels[n].max_ball);
            max_ball[t][n] = ball;
            worst[t] = std::max(worst[t], ball / neighborhood_bound(params, n));
        }
    });

    VerificationReport r;
    r.statement = Statement::NeighborhoodBound;
    r.trials = o.trials;
    std::size_t ok = 0;
    for (double w : worst) {
        ok += w <= 1.0;
        r.worst_deviation = std::max(r.worst_deviation, w);
    }
    r.pass_fraction = static_cast<double>(ok) / static_cast<double>(std::max<std::size_t>(o.trials, 1));
    r.implied_constant = 10.0 * r.worst_deviation;
    r.threshold = o.pass_threshold;
    r.criterion = "pass_fraction >= threshold";
    r.passed = o.trials > 0 && r.pass_fraction >= r.threshold;
    for (std::size_t n = 1; n <= depth; ++n) {
        double m = 0.0;
        for (const auto &b : max_ball)
            m = std::max(m, b[n]);
        r.details.emplace_back("max_ball_" + std::to_string(n), m);
        r.details.emplace_back("bound_" + std::to_string(n), neighborhood_bound(params, n));
    }
    return r;
}

inline VerificationReport verify_variance_limit(const Graph &g, double sigma2, const VerifyOptions &o) {
    const double limit = variance_limit(g) * sigma2;
    ProfileOptions po;
    po.workers = o.workers;
    const auto prof = exact_variance_profile(g, OperatorSpec::random_walk(), o.limit_depth, sigma2, po);

    VerificationReport r;
    r.statement = Statement::VarianceLimit;
    r.trials = 1;
    std::size_t ok = 0;
    for (double v : prof.per_node) {
        const double dev = std::abs(v - limit);
        r.worst_deviation = std::max(r.worst_deviation, dev);
        ok += dev < o.limit_tolerance;
    }
    r.pass_fraction = static_cast<double>(ok) / static_cast<double>(g.num_nodes());
    r.threshold = o.limit_tolerance;
    r.criterion = "worst_deviation < threshold";
    r.passed = r.worst_deviation < r.threshold;
    r.details.emplace_back("limit", limit);
    r.details.emplace_back("depth", static_cast<double>(o.limit_depth));
    return r;
}

inline std::vector<Graph> sym_suite(std::uint64_t seed, const VerifyOptions &o) {
    std::vector<Graph> graphs;
    for (std::size_t i = 0; i < o.sym_graphs; ++i) {
        Rng rng(stream_seed(seed, i, StreamTag::Graph));
        const std::size_t n = 3 + rng.below(std::max<std::size_t>(o.sym_max_nodes, 3) - 2);
        const double extra = 0.3 * rng.uniform();
        graphs.push_back(families::random_connected(n, extra, rng.engine()()));
    }
    return graphs;
}

inline VerificationReport verify_sym_monotone(const std::vector<Graph> &graphs, const VerifyOptions &o) {
    const auto found = counterexample_search(graphs, o.sym_depths, OperatorSpec::symmetric(),
                                             o.increase_tolerance);
    std::size_t pairs = 0;
    for (const auto &g : graphs)
        pairs += g.num_nodes() * o.sym_depths;

    VerificationReport r;
    r.statement = Statement::SymMonotone;
    r.trials = graphs.size();
    for (const auto &f : found)
        r.worst_deviation = std::max(r.worst_deviation, f.after - f.before);
    r.pass_fraction = pairs ? 1.0 - static_cast<double>(found.size()) / static_cast<double>(pairs) : 0.0;
    r.threshold = 1.0;
    r.criterion = "pass_fraction >= threshold";
    r.passed = pairs > 0 && found.empty();
    r.details.emplace_back("increases", static_cast<double>(found.size()));
    r.details.emplace_back("node_depth_pairs", static_cast<double>(pairs));
    return r;
}

inline VerificationReport verify_relu(const CsbmParams &params, const VerifyOptions &o) {
    const auto lin = OperatorSpec::random_walk();
    const auto relu = lin.with_relu();
    std::vector<std::optional<std::pair<double, double>>> errs(o.trials);
    parallel_for_index(o.trials, o.workers, [&](std::size_t t) {
        const Graph g = sample_graph(params, t);
        if (!g.isolated_nodes().empty())
            return;
        const Features f = sample_features(params, g.labels(), t);
        const Split split = make_split(params.n_nodes, o.split, stream_seed(params.seed, t, StreamTag::Split));
        const auto h_lin = propagate(g, f.matrix, lin, o.relu_depth);
        const auto h_relu = propagate(g, f.matrix, relu, o.relu_depth);
        const double e_lin = 1.0 - threshold_accuracy(h_lin.matrix, g.labels(), split, o.rule, f.class_means).test;
        const double e_relu = 1.0 - threshold_accuracy(h_relu.matrix, g.labels(), split, o.rule, f.class_means).test;
        errs[t] = {e_lin, e_relu};
    });

    VerificationReport r;
    r.statement = Statement::ReluNoGain;
    r.trials = o.trials;
    std::vector<double> diff, lin_err, relu_err;
    std::size_t no_gain = 0;
    for (const auto &e : errs) {
        if (!e) {
            ++r.degenerate_trials;
            continue;
        }
        lin_err.push_back(e->first);
        relu_err.push_back(e->second);
        diff.push_back(e->second - e->first);
        no_gain += e->second >= e->first;
    }
    const auto d = mean_se(diff);
    r.pass_fraction = diff.empty() ? 0.0 : static_cast<double>(no_gain) / static_cast<double>(diff.size());
    r.worst_deviation = diff.empty() ? 0.0 : std::max(0.0, -*std::min_element(diff.begin(), diff.end()));
    r.threshold = -2.0 * d.se;
    r.criterion = "mean_difference >= -2 stderr";
    r.passed = diff.size() >= 2 && d.mean >= r.threshold;
    r.details.emplace_back("mean_difference", d.mean);
    r.details.emplace_back("difference_stderr", d.se);
    r.details.emplace_back("linear_error", mean_se(lin_err).mean);
    r.details.emplace_back("relu_error", mean_se(relu_err).mean);
    r.details.emplace_back("equality_regime", params.mu1 >= -params.mu2 ? 1.0 : 0.0);
    return r;
}

} // namespace detail

/// Empirical check of one probabilistic statement. CSBM statements draw
/// trials from `params`; VarianceLimit and SymMonotone use `graph` when given
/// (the triangle-with-pendant fixture and a seeded random suite otherwise).
inline VerificationReport verify(Statement statement, const CsbmParams &params,
                                 const std::optional<Graph> &graph, const VerifyOptions &opts) {
    opts.concentration.validate();
    if (graph && needs_generator(statement))
        throw InvalidArgument(std::string(to_string(statement))
                              + " needs a CSBM model, not a fixed graph");
    if (needs_generator(statement)) {
        params.validate();
        if (opts.trials < 1)
            throw InvalidArgument("verify needs at least one trial");
    }
    switch (statement) {
    case Statement::MeanGap: return detail::verify_mean_gap(params, opts);
    case Statement::VarianceBounds: return detail::verify_variance_bounds(params, opts);
    case Statement::DegreeConcentration: return detail::verify_degrees(params, opts);
    case Statement::NeighborhoodBound: return detail::verify_neighborhoods(params, opts);
    case Statement::VarianceLimit:
        return detail::verify_variance_limit(graph ? *graph : families::triangle_with_pendant(),
                                             params.sigma2, opts);
    case Statement::SymMonotone: {
        if (graph)
            return detail::verify_sym_monotone({*graph}, opts);
        return detail::verify_sym_monotone(detail::sym_suite(params.seed, opts), opts);
    }
    case Statement::ReluNoGain: return detail::verify_relu(params, opts);
    }
    throw InvalidArgument("unknown statement");
}

} // namespace csbm
