#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csbm/errors.hpp"
#include "csbm/graph.hpp"
#include "csbm/matrix.hpp"
#include "csbm/parallel.hpp"
#include "csbm/params.hpp"
#include "csbm/propagation.hpp"
#include "csbm/rng.hpp"
#include "csbm/sampling.hpp"
#include "csbm/structure.hpp"

namespace csbm {

// ---------------------------------------------------------------------------
// Class statistics
// ---------------------------------------------------------------------------

struct ClassStats {
    std::size_t depth = 0;
    /// C x d per-class arithmetic means.
    Matrix class_means;
    /// Per-class within-class sample variance (n-1 denominator), averaged over dimensions.
    std::vector<double> class_within_var;
    /// Average of class_within_var over classes.
    double pooled_within_var = 0.0;
    /// C x C Euclidean distances between class means.
    Matrix pairwise_mean_dists;

    /// Mean of the off-diagonal pairwise distances (the mixing metric).
    double mean_pairwise_dist() const {
        const std::size_t c = pairwise_mean_dists.rows();
        double s = 0.0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = i + 1; j < c; ++j, ++k)
                s += pairwise_mean_dists(i, j);
        return k ? s / static_cast<double>(k) : 0.0;
    }
};

/// Per-class means, within-class variances and inter-class mean distances
/// for labels in 1..num_classes. A class with a single member contributes
/// zero within-class variance.
inline ClassStats class_stats(const Matrix &h, std::span<const int> labels, int num_classes,
                              std::size_t depth = 0) {
    if (labels.size() != h.rows())
        throw InvalidArgument("labels length does not match representation rows");
    if (num_classes < 1)
        throw InvalidArgument("need at least one class");
    const std::size_t c = static_cast<std::size_t>(num_classes);
    const std::size_t d = h.cols();

    std::vector<std::size_t> count(c, 0);
    ClassStats st;
    st.depth = depth;
    st.class_means = Matrix(c, d);
    for (std::size_t v = 0; v < h.rows(); ++v) {
        const int l = labels[v];
        if (l < 1 || l > num_classes)
            throw InvalidArgument("label " + std::to_string(l) + " outside 1.."
                                  + std::to_string(num_classes));
        ++count[l - 1];
        auto mean = st.class_means.row(l - 1);
        auto x = h.row(v);
        for (std::size_t k = 0; k < d; ++k)
            mean[k] += x[k];
    }
    for (std::size_t i = 0; i < c; ++i) {
        if (count[i] == 0)
            throw InvalidArgument("class " + std::to_string(i + 1) + " has no members");
        for (double &m : st.class_means.row(i))
            m /= static_cast<double>(count[i]);
    }

    std::vector<double> sq(c, 0.0);
    for (std::size_t v = 0; v < h.rows(); ++v) {
        const auto i = static_cast<std::size_t>(labels[v] - 1);
        auto mean = st.class_means.row(i);
        auto x = h.row(v);
        for (std::size_t k = 0; k < d; ++k) {
            const double dev = x[k] - mean[k];
            sq[i] += dev * dev;
        }
    }
    st.class_within_var.resize(c);
    double pooled = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        st.class_within_var[i] =
            count[i] > 1 ? sq[i] / (static_cast<double>(count[i] - 1) * static_cast<double>(d)) : 0.0;
        pooled += st.class_within_var[i];
    }
    st.pooled_within_var = pooled / static_cast<double>(c);

    st.pairwise_mean_dists = Matrix(c, c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = i + 1; j < c; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = st.class_means(i, k) - st.class_means(j, k);
                s += diff * diff;
            }
            st.pairwise_mean_dists(i, j) = st.pairwise_mean_dists(j, i) = std::sqrt(s);
        }
    return st;
}

/// Mean over dimensions of (class-2 mean - class-1 mean).
inline double class_mean_gap(const ClassStats &st) {
    if (st.class_means.rows() < 2)
        throw InvalidArgument("class_mean_gap needs two classes");
    double s = 0.0;
    for (std::size_t k = 0; k < st.class_means.cols(); ++k)
        s += st.class_means(1, k) - st.class_means(0, k);
    return s / static_cast<double>(st.class_means.cols());
}

// ---------------------------------------------------------------------------
// Splits and the threshold classifier
// ---------------------------------------------------------------------------

struct SplitFractions {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;

    void validate() const {
        if (!(train > 0.0 && val > 0.0 && test > 0.0))
            throw InvalidArgument("split fractions must be positive");
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw InvalidArgument("split fractions must sum to 1");
    }
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded random permutation cut into train/val/test. The validation share is
/// carried for format parity; the threshold rule has nothing to tune on it.
inline Split make_split(std::size_t n, const SplitFractions &fr, std::uint64_t seed) {
    fr.validate();
    std::vector<std::size_t> perm(n);
    for (std::size_t v = 0; v < n; ++v)
        perm[v] = v;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(fr.train * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train,
                                static_cast<std::size_t>(std::llround(fr.val * static_cast<double>(n))));
    Split s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    return s;
}

/// How the two-class linear threshold is placed.
///  TrainMidpoint: project on the train-set mean-difference direction and cut
///    at the projected midpoint of the train class means.
///  PopulationMidpoint: the Bayes rule of the generative model, sum_j x_j
///    against d (mu1 + mu2) / 2. Needs the generative class means.
enum class DecisionRule { TrainMidpoint, PopulationMidpoint };

inline const char *to_string(DecisionRule r) {
    return r == DecisionRule::TrainMidpoint ? "train_midpoint" : "population_midpoint";
}

struct Accuracy {
    double train = 0.0;
    double test = 0.0;
};

/// Two-class threshold accuracy on the train and test index sets. Labels
/// must be 1 or 2; ties go to class 1.
inline Accuracy threshold_accuracy(const Matrix &h, std::span<const int> labels, const Split &split,
                                   DecisionRule rule = DecisionRule::TrainMidpoint,
                                   std::optional<std::pair<double, double>> population_means = {}) {
    if (labels.size() != h.rows())
        throw InvalidArgument("labels length does not match representation rows");
    const std::size_t d = h.cols();
    std::vector<double> direction(d, 1.0);
    double threshold = 0.0;

    if (rule == DecisionRule::PopulationMidpoint) {
        if (!population_means)
            throw InvalidArgument("population_midpoint rule needs generative class means");
        const auto [m1, m2] = *population_means;
        const double sign = m2 >= m1 ? 1.0 : -1.0;
        std::fill(direction.begin(), direction.end(), sign);
        threshold = sign * static_cast<double>(d) * (m1 + m2) / 2.0;
    } else {
        std::vector<double> mean1(d, 0.0), mean2(d, 0.0);
        std::size_t c1 = 0, c2 = 0;
        for (auto v : split.train) {
            auto x = h.row(v);
            if (labels[v] == 1) {
                ++c1;
                for (std::size_t k = 0; k < d; ++k)
                    mean1[k] += x[k];
            } else if (labels[v] == 2) {
                ++c2;
                for (std::size_t k = 0; k < d; ++k)
                    mean2[k] += x[k];
            } else {
                throw InvalidArgument("threshold_accuracy supports two classes only");
            }
        }
        if (c1 == 0 || c2 == 0)
            throw InvalidArgument("train split is missing class " + std::to_string(c1 == 0 ? 1 : 2));
        threshold = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            mean1[k] /= static_cast<double>(c1);
            mean2[k] /= static_cast<double>(c2);
            direction[k] = mean2[k] - mean1[k];
            threshold += direction[k] * (mean1[k] + mean2[k]) / 2.0;
        }
    }

    auto score = [&](const std::vector<std::size_t> &idx) {
        if (idx.empty())
            return 0.0;
        std::size_t correct = 0;
        for (auto v : idx) {
            if (labels[v] != 1 && labels[v] != 2)
                throw InvalidArgument("threshold_accuracy supports two classes only");
            double proj = 0.0;
            auto x = h.row(v);
            for (std::size_t k = 0; k < d; ++k)
                proj += direction[k] * x[k];
            const int predicted = proj > threshold ? 2 : 1;
            correct += predicted == labels[v];
        }
        return static_cast<double>(correct) / static_cast<double>(idx.size());
    };
    return {score(split.train), score(split.test)};
}

// ---------------------------------------------------------------------------
// Trial aggregation
// ---------------------------------------------------------------------------

/// Mean and standard error (sample sd / sqrt(T)) of per-trial values.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> xs) {
    MeanSe r;
    if (xs.empty())
        return r;
    CompensatedSum s;
    for (double x : xs)
        s.add(x);
    r.mean = s.value() / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        CompensatedSum q;
        for (double x : xs)
            q.add((x - r.mean) * (x - r.mean));
        r.se = std::sqrt(q.value() / static_cast<double>(xs.size() - 1)
                         / static_cast<double>(xs.size()));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Layerwise sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    std::size_t depth = 0;
    OperatorSpec op;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double train_acc_stderr = 0.0;
    double test_acc_stderr = 0.0;
    /// Mean inter-class distance of class means.
    double mixing_metric = 0.0;
    /// Pooled within-class variance.
    double denoising_metric = 0.0;
    /// mixing / (2 sqrt(denoising)).
    double empirical_z = 0.0;
    std::size_t trials_used = 0;
};

struct SweepOptions {
    SplitFractions split;
    std::size_t trials = 5;
    std::size_t workers = 1;
    DecisionRule rule = DecisionRule::TrainMidpoint;
    /// Seed for the split stream of ingested graphs (CSBM sweeps use params.seed).
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // operator-major, depth-minor
    std::size_t degenerate_trials = 0;
};

namespace detail {

struct SweepSample {
    double train = 0.0, test = 0.0, mixing = 0.0, denoising = 0.0, z = 0.0;
};

// samples[op][depth] for one trial.
inline std::vector<std::vector<SweepSample>>
sweep_one_trial(const Graph &g, const Matrix &x, std::span<const OperatorSpec> ops,
                std::size_t n_max, const Split &split, DecisionRule rule,
                std::optional<std::pair<double, double>> means) {
    std::vector<std::vector<SweepSample>> out(ops.size());
    for (std::size_t o = 0; o < ops.size(); ++o) {
        out[o].resize(n_max + 1);
        Propagator prop(g, x, ops[o]);
        for (std::size_t n = 0; n <= n_max; ++n) {
            if (n > 0)
                prop.advance();
            const auto rep = prop.output();
            const auto acc = threshold_accuracy(rep.matrix, g.labels(), split, rule, means);
            const auto st = class_stats(rep.matrix, g.labels(), 2, n);
            auto &s = out[o][n];
            s.train = acc.train;
            s.test = acc.test;
            s.mixing = st.mean_pairwise_dist();
            s.denoising = st.pooled_within_var;
            s.z = s.denoising > 0.0 ? s.mixing / (2.0 * std::sqrt(s.denoising)) : 0.0;
        }
    }
    return out;
}

inline SweepResult
reduce_sweep(const std::vector<std::optional<std::vector<std::vector<SweepSample>>>> &trials,
             std::span<const OperatorSpec> ops, std::size_t n_max) {
    SweepResult res;
    for (const auto &t : trials)
        res.degenerate_trials += !t.has_value();
    for (std::size_t o = 0; o < ops.size(); ++o)
        for (std::size_t n = 0; n <= n_max; ++n) {
            std::vector<double> tr, te, mix, den, z;
            for (const auto &t : trials) {
                if (!t)
                    continue;
                const auto &s = (*t)[o][n];
                tr.push_back(s.train);
                te.push_back(s.test);
                mix.push_back(s.mixing);
                den.push_back(s.denoising);
                z.push_back(s.z);
            }
            SweepRow row;
            row.depth = n;
            row.op = ops[o];
            const auto a = mean_se(tr), b = mean_se(te);
            row.train_acc = a.mean;
            row.train_acc_stderr = a.se;
            row.test_acc = b.mean;
            row.test_acc_stderr = b.se;
            row.mixing_metric = mean_se(mix).mean;
            row.denoising_metric = mean_se(den).mean;
            row.empirical_z = mean_se(z).mean;
            row.trials_used = tr.size();
            res.rows.push_back(row);
        }
    return res;
}

} // namespace detail

/// CSBM sweep: every trial draws a fresh graph, features and split, then
/// walks each operator through depths 0..n_max incrementally. Trials whose
/// graph has an isolated node are skipped and counted.
inline SweepResult layerwise_sweep(const CsbmParams &params, std::span<const OperatorSpec> ops,
                                   std::size_t n_max, const SweepOptions &opts) {
    params.validate();
    opts.split.validate();
    for (const auto &op : ops)
        op.validate();
    std::vector<std::optional<std::vector<std::vector<detail::SweepSample>>>> trials(opts.trials);
    parallel_for_index(opts.trials, opts.workers, [&](std::size_t t) {
        const Graph g = sample_graph(params, t);
        if (!g.isolated_nodes().empty())
            return;
        const Features f = sample_features(params, g.labels(), t);
        const Split split =
            make_split(params.n_nodes, opts.split, stream_seed(params.seed, t, StreamTag::Split));
        trials[t] = detail::sweep_one_trial(g, f.matrix, ops, n_max, split, opts.rule, f.class_means);
    });
    return detail::reduce_sweep(trials, ops, n_max);
}

/// Fixed-graph sweep (ingested data): trials vary only the split.
inline SweepResult layerwise_sweep(const Graph &g, const Features &x,
                                   std::span<const OperatorSpec> ops, std::size_t n_max,
                                   const SweepOptions &opts) {
    opts.split.validate();
    for (const auto &op : ops)
        op.validate();
    g.require_no_isolated();
    std::vector<std::optional<std::vector<std::vector<detail::SweepSample>>>> trials(opts.trials);
    parallel_for_index(opts.trials, opts.workers, [&](std::size_t t) {
        const Split split =
            make_split(g.num_nodes(), opts.split, stream_seed(opts.seed, t, StreamTag::Split));
        trials[t] = detail::sweep_one_trial(g, x.matrix, ops, n_max, split, opts.rule, x.class_means);
    });
    return detail::reduce_sweep(trials, ops, n_max);
}

// ---------------------------------------------------------------------------
// Monte Carlo moments
// ---------------------------------------------------------------------------

struct MomentRow {
    std::size_t depth = 0;
    MeanSe gap;
    /// Pooled within-class sample variance across nodes.
    MeanSe pooled_var;
    /// Per-node variance over the feature noise, estimated from two independent
    /// feature draws on the same graph: mean_i (h_i - h'_i)^2 / 2. Unbiased for
    /// the mean of the exact variance profile.
    MeanSe node_var;
};

struct MomentSeries {
    std::vector<MomentRow> rows;  // depth 0..n_max
    /// per_trial_*[t][n] for the trials that were used.
    std::vector<std::vector<double>> per_trial_gap;
    std::vector<std::vector<double>> per_trial_pooled_var;
    std::vector<std::vector<double>> per_trial_node_var;
    std::size_t degenerate_trials = 0;
};

struct MomentOptions {
    std::size_t workers = 1;
    /// Also draw a second feature matrix per trial for the node-variance estimate.
    bool paired_draw = true;
};

inline MomentSeries monte_carlo_moments(const CsbmParams &params, const OperatorSpec &op,
                                        std::size_t n_max, std::size_t trials,
                                        const MomentOptions &opts = {}) {
    params.validate();
    op.validate();
    if (trials < 2)
        throw InvalidArgument("monte_carlo_moments needs at least 2 trials");

    struct Sample {
        std::vector<double> gap, pooled, node;
    };
    std::vector<std::optional<Sample>> samples(trials);
    parallel_for_index(trials, opts.workers, [&](std::size_t t) {
        const Graph g = sample_graph(params, t);
        if (!g.isolated_nodes().empty())
            return;
        const Features f = sample_features(params, g.labels(), t);
        std::optional<Propagator> alt;
        if (opts.paired_draw)
            alt.emplace(g, sample_features(params, g.labels(), t, StreamTag::FeaturesAlt).matrix, op);
        Propagator prop(g, f.matrix, op);

        Sample s;
        for (std::size_t n = 0; n <= n_max; ++n) {
            if (n > 0) {
                prop.advance();
                if (alt)
                    alt->advance();
            }
            const auto h = prop.output().matrix;
            const auto st = class_stats(h, g.labels(), 2, n);
            s.gap.push_back(class_mean_gap(st));
            s.pooled.push_back(st.pooled_within_var);
            if (alt) {
                const auto h2 = alt->output().matrix;
                CompensatedSum acc;
                auto a = h.values();
                auto b = h2.values();
                for (std::size_t k = 0; k < a.size(); ++k)
                    acc.add((a[k] - b[k]) * (a[k] - b[k]) / 2.0);
                s.node.push_back(acc.value() / static_cast<double>(a.size()));
            }
        }
        samples[t] = std::move(s);
    });

    MomentSeries out;
    for (auto &s : samples) {
        if (!s) {
            ++out.degenerate_trials;
            continue;
        }
        out.per_trial_gap.push_back(s->gap);
        out.per_trial_pooled_var.push_back(s->pooled);
        if (opts.paired_draw)
            out.per_trial_node_var.push_back(s->node);
    }
    auto column = [](const std::vector<std::vector<double>> &m, std::size_t n) {
        std::vector<double> c;
        c.reserve(m.size());
        for (const auto &r : m)
            c.push_back(r[n]);
        return c;
    };
    for (std::size_t n = 0; n <= n_max; ++n) {
        MomentRow row;
        row.depth = n;
        row.gap = mean_se(column(out.per_trial_gap, n));
        row.pooled_var = mean_se(column(out.per_trial_pooled_var, n));
        if (opts.paired_draw)
            row.node_var = mean_se(column(out.per_trial_node_var, n));
        out.rows.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random-walk variance counterexamples
// ---------------------------------------------------------------------------

struct VarianceIncrease {
    std::size_t graph_index = 0;
    std::size_t node = 0;
    /// The increase happens between depth - 1 and depth.
    std::size_t depth = 0;
    double before = 0.0;
    double after = 0.0;
};

/// Every strict per-node variance increase (> tol, sigma2 = 1) between
/// consecutive depths 0..n_max under `op` on small graphs.
inline std::vector<VarianceIncrease>
counterexample_search(std::span<const Graph> graphs, std::size_t n_max,
                      const OperatorSpec &op = OperatorSpec::random_walk(), double tol = 1e-12) {
    std::vector<VarianceIncrease> found;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph &g = graphs[gi];
        if (g.num_nodes() > 50)
            throw PreconditionError("counterexample_search is limited to graphs with N <= 50");
        const auto profiles = exact_variance_profiles(g, op, n_max, 1.0);
        for (std::size_t n = 1; n <= n_max; ++n)
            for (std::size_t v = 0; v < g.num_nodes(); ++v) {
                const double before = profiles[n - 1].per_node[v];
                const double after = profiles[n].per_node[v];
                if (after - before > tol)
                    found.push_back({gi, v, n, before, after});
            }
    }
    return found;
}

namespace families {

/// Connected graph on n nodes: a random recursive tree plus independent extra
/// edges with probability extra_prob.
inline Graph random_connected(std::size_t n, double extra_prob, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Edge> e;
    for (std::size_t v = 1; v < n; ++v)
        e.emplace_back(rng.below(v), v);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.uniform() < extra_prob)
                e.emplace_back(u, v);
    return Graph::from_edges(n, e);
}

} // namespace families

} // namespace csbm
