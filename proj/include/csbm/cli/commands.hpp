#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbm/cli/config.hpp"
#include "csbm/cli/format.hpp"
#include "csbm/depth_predictor.hpp"
#include "csbm/empirics.hpp"
#include "csbm/io.hpp"
#include "csbm/propagation.hpp"
#include "csbm/theory.hpp"
#include "csbm/verify.hpp"

namespace csbm::cli {

inline std::string tool_version() { return CSBM_LAB_VERSION; }

inline std::string comment_line(const ExperimentConfig &c) {
    return "csbm-lab " + tool_version() + " config_hash=" + config_hash(c)
           + " seed=" + std::to_string(c.seed);
}

inline json meta_json(const ExperimentConfig &c) {
    return {{"tool", "csbm-lab"},
            {"version", tool_version()},
            {"config_hash", config_hash(c)},
            {"seed", c.seed}};
}

namespace detail {

inline LoadedGraph load_ingest(const IngestPaths &paths, bool need_features) {
    if (need_features && !paths.features)
        throw ConfigError("ingested model needs a features file for this command");
    return load_graph(paths.edges, paths.labels, paths.features);
}

/// Emits a table as CSV or as {"meta", "rows"} JSON.
inline void emit_table(const ExperimentConfig &c, std::ostream &out,
                       const std::vector<std::string> &columns,
                       const std::vector<std::vector<json>> &rows) {
    if (c.output_format == OutputFormat::Json) {
        json doc;
        doc["meta"] = meta_json(c);
        doc["columns"] = columns;
        doc["rows"] = json::array();
        for (const auto &r : rows) {
            json obj = json::object();
            for (std::size_t i = 0; i < columns.size(); ++i)
                obj[columns[i]] = r[i];
            doc["rows"].push_back(obj);
        }
        out << doc.dump(2) << "\n";
        return;
    }
    CsvWriter w(out);
    w.comment(comment_line(c));
    w.header(columns);
    for (const auto &r : rows) {
        std::vector<std::string> fields;
        fields.reserve(r.size());
        for (const auto &v : r) {
            if (v.is_string())
                fields.push_back(v.get<std::string>());
            else if (v.is_number_float())
                fields.push_back(format_double(v.get<double>()));
            else if (v.is_null())
                fields.push_back("nan");
            else
                fields.push_back(v.dump());
        }
        w.row(fields);
    }
}

} // namespace detail

inline int cmd_sweep(const ExperimentConfig &c, std::ostream &out, std::ostream &log) {
    SweepOptions o;
    o.split = c.split;
    o.trials = c.trials;
    o.workers = c.workers;
    o.rule = c.rule();
    o.seed = c.seed;

    SweepResult res;
    if (c.csbm) {
        res = layerwise_sweep(c.params(), c.operators, c.n_max, o);
    } else {
        if (o.rule == DecisionRule::PopulationMidpoint)
            throw ConfigError("population_midpoint needs a csbm model; ingested graphs use train_midpoint");
        const auto loaded = detail::load_ingest(*c.ingest, true);
        res = layerwise_sweep(loaded.graph, *loaded.features, c.operators, c.n_max, o);
    }
    if (res.degenerate_trials)
        log << "note: skipped " << res.degenerate_trials << " trial(s) with isolated nodes\n";

    const std::vector<std::string> cols{"depth", "operator", "train_acc", "test_acc",
                                        "train_acc_stderr", "test_acc_stderr", "mixing_metric",
                                        "denoising_metric", "empirical_z"};
    std::vector<std::vector<json>> rows;
    for (const auto &r : res.rows)
        rows.push_back({r.depth, r.op.name(), r.train_acc, r.test_acc, r.train_acc_stderr,
                        r.test_acc_stderr, r.mixing_metric, r.denoising_metric, r.empirical_z});
    detail::emit_table(c, out, cols, rows);
    return 0;
}

inline int cmd_theory(const ExperimentConfig &c, std::ostream &out, std::ostream &) {
    const auto params = c.params();
    const std::vector<std::string> cols{"depth", "operator", "mean_gap", "var_lower", "var_upper",
                                        "z_lower", "z_upper", "bayes_err_lower", "bayes_err_upper",
                                        "flags"};
    std::vector<std::vector<json>> rows;
    for (const auto &op : c.operators) {
        if (op.kind == OperatorKind::Symmetric)
            throw ConfigError("theory has no closed form for the symmetric operator");
        if (op.terminal_relu)
            throw ConfigError("theory covers linear operators only");
        for (const auto &t : theory_curve(params, op, c.n_max)) {
            std::string flags;
            if (t.upper_floored)
                flags = "upper_floored";
            if (t.ppnp_series_exceeds_sigma2)
                flags += std::string(flags.empty() ? "" : ";") + "ppnp_series_exceeds_sigma2";
            if (!t.consistent())
                flags += std::string(flags.empty() ? "" : ";") + "bounds_cross";
            rows.push_back({t.depth, op.name(), t.mean_gap, t.var_lower, t.var_upper, t.z_lower,
                            t.z_upper, t.bayes_err_lower, t.bayes_err_upper, flags});
        }
    }
    detail::emit_table(c, out, cols, rows);
    return 0;
}

inline json prediction_json(const DepthPrediction &p) {
    json curve = json::array();
    for (std::size_t n = 0; n < p.z_curve.size(); ++n)
        curve.push_back({{"depth", n}, {"z_lower", p.z_curve[n].lower}, {"z_upper", p.z_curve[n].upper}});
    return {{"scenario", to_string(p.scenario)},
            {"n0_interval", {p.n0_interval.lo, p.n0_interval.hi}},
            {"nstar_interval", {p.nstar_interval.lo, p.nstar_interval.hi}},
            {"nstar_floor", p.nstar_floor},
            {"horizon", p.horizon},
            {"horizon_flags",
             {{"horizon_exhausted", p.flags.horizon_exhausted},
              {"nstar_left_fallback", p.flags.nstar_left_fallback},
              {"nstar_right_fallback", p.flags.nstar_right_fallback}}},
            {"z_input", p.z_input},
            {"z_curve", curve}};
}

inline int cmd_predict_depth(const ExperimentConfig &c, std::ostream &out, std::ostream &) {
    json doc = prediction_json(predict_depth(c.params(), c.horizon));
    doc["meta"] = meta_json(c);
    out << doc.dump(2) << "\n";
    return 0;
}

inline json report_json(const VerificationReport &r) {
    json details = json::object();
    for (const auto &[k, v] : r.details)
        details[k] = v;
    return {{"statement", to_string(r.statement)},
            {"trials", r.trials},
            {"pass_fraction", r.pass_fraction},
            {"worst_deviation", r.worst_deviation},
            {"implied_constant", r.implied_constant},
            {"threshold", r.threshold},
            {"criterion", r.criterion},
            {"passed", r.passed},
            {"degenerate_trials", r.degenerate_trials},
            {"details", details}};
}

/// Exit code 0 iff the statement's pass rule holds, 1 otherwise.
inline int cmd_verify(const std::string &statement, const ExperimentConfig &c, std::ostream &out,
                      std::ostream &) {
    Statement s;
    try {
        s = parse_statement(statement);
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    std::optional<Graph> graph;
    if (c.verify_graph)
        graph = detail::load_ingest(*c.verify_graph, false).graph;
    else if (c.ingest)
        graph = detail::load_ingest(*c.ingest, false).graph;
    if (graph && needs_generator(s))
        throw ConfigError(std::string(to_string(s)) + " needs a csbm model, not an ingested graph");

    CsbmParams params = c.csbm ? c.params() : CsbmParams{};
    params.seed = c.seed;
    const auto report = verify(s, params, graph, verify_options(c));
    json doc = report_json(report);
    doc["meta"] = meta_json(c);
    out << doc.dump(2) << "\n";
    return report.passed ? 0 : 1;
}

/// Per-depth class statistics of an ingested graph: inter-class mean
/// distances and within-class variances for every operator.
inline int cmd_ingest(const ExperimentConfig &c, std::ostream &out, std::ostream &log) {
    if (!c.ingest)
        throw ConfigError("ingest needs model.type = ingest");
    const auto loaded = detail::load_ingest(*c.ingest, true);
    const Graph &g = loaded.graph;
    if (!loaded.isolated_nodes.empty())
        log << "note: graph has " << loaded.isolated_nodes.size() << " isolated node(s)\n";
    const int classes = g.num_classes();

    std::vector<std::string> cols{"depth", "operator", "pooled_within_var", "mean_pairwise_dist"};
    for (int i = 1; i <= classes; ++i)
        for (int j = i + 1; j <= classes; ++j)
            cols.push_back("dist_" + std::to_string(i) + "_" + std::to_string(j));
    for (int i = 1; i <= classes; ++i)
        cols.push_back("var_" + std::to_string(i));

    std::vector<std::vector<json>> rows;
    for (const auto &op : c.operators) {
        Propagator prop(g, loaded.features->matrix, op);
        for (std::size_t n = 0; n <= c.n_max; ++n) {
            if (n > 0)
                prop.advance();
            const auto st = class_stats(prop.output().matrix, g.labels(), classes, n);
            std::vector<json> row{n, op.name(), st.pooled_within_var, st.mean_pairwise_dist()};
            for (int i = 0; i < classes; ++i)
                for (int j = i + 1; j < classes; ++j)
                    row.push_back(st.pairwise_mean_dists(i, j));
            for (double v : st.class_within_var)
                row.push_back(v);
            rows.push_back(std::move(row));
        }
    }
    detail::emit_table(c, out, cols, rows);
    return 0;
}

} // namespace csbm::cli
