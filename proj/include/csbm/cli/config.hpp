#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbm/empirics.hpp"
#include "csbm/errors.hpp"
#include "csbm/params.hpp"
#include "csbm/propagation.hpp"
#include "csbm/theory.hpp"
#include "csbm/verify.hpp"

#ifndef CSBM_LAB_VERSION
#define CSBM_LAB_VERSION "0.1.0"
#endif

namespace csbm::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Any problem with the configuration document or its overrides (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

struct IngestPaths {
    std::string edges;
    std::string labels;
    std::optional<std::string> features;
};

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
    std::optional<CsbmParams> csbm;
    std::optional<IngestPaths> ingest;
    std::vector<OperatorSpec> operators{OperatorSpec::random_walk()};
    std::size_t n_max = 20;
    std::size_t trials = 5;
    SplitFractions split;
    ConcentrationConfig concentration;
    std::optional<DecisionRule> decision_rule;
    std::size_t horizon = 20;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::optional<std::string> output_path;
    OutputFormat output_format = OutputFormat::Csv;
    VerifyOptions verify;
    std::optional<IngestPaths> verify_graph;

    /// CSBM sweeps default to the generative midpoint; ingested graphs have no
    /// generative means and use the train midpoint.
    DecisionRule rule() const {
        if (decision_rule)
            return *decision_rule;
        return csbm ? DecisionRule::PopulationMidpoint : DecisionRule::TrainMidpoint;
    }

    CsbmParams params() const {
        if (!csbm)
            throw ConfigError("this command needs a csbm model");
        CsbmParams p = *csbm;
        p.seed = seed;
        return p;
    }
};

namespace detail {

inline void check_keys(const json &obj, const std::string &where, std::set<std::string> allowed) {
    if (!obj.is_object())
        throw ConfigError(where + " must be a JSON object");
    for (const auto &[key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json &obj, const char *key, T &out, const std::string &where) {
    if (!obj.contains(key))
        return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception &) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

inline std::size_t read_count(const json &obj, const char *key, std::size_t fallback,
                              const std::string &where) {
    if (!obj.contains(key))
        return fallback;
    const auto &v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + "." + key + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

inline std::string resolve(const std::string &path, const std::filesystem::path &base) {
    const std::filesystem::path p(path);
    return p.is_absolute() || base.empty() ? path : (base / p).string();
}

inline IngestPaths parse_paths(const json &j, const std::string &where,
                               const std::filesystem::path &base, bool with_type) {
    if (with_type)
        check_keys(j, where, {"type", "edges", "labels", "features"});
    else
        check_keys(j, where, {"edges", "labels", "features"});
    if (!j.contains("edges") || !j.contains("labels"))
        throw ConfigError(where + " needs 'edges' and 'labels' paths");
    IngestPaths p;
    read(j, "edges", p.edges, where);
    read(j, "labels", p.labels, where);
    p.edges = resolve(p.edges, base);
    p.labels = resolve(p.labels, base);
    if (j.contains("features")) {
        std::string f;
        read(j, "features", f, where);
        p.features = resolve(f, base);
    }
    return p;
}

inline OperatorSpec parse_operator(const json &j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "random_walk")
            return OperatorSpec::random_walk();
        if (s == "symmetric")
            return OperatorSpec::symmetric();
        throw ConfigError("operator '" + s + "' needs an object with its parameters");
    }
    check_keys(j, "operator", {"kind", "alpha", "truncation", "relu"});
    std::string kind;
    read(j, "kind", kind, "operator");
    OperatorSpec op;
    if (kind == "random_walk")
        op = OperatorSpec::random_walk();
    else if (kind == "symmetric")
        op = OperatorSpec::symmetric();
    else if (kind == "ppnp")
        op = OperatorSpec::ppnp(0.1, 10);
    else if (kind == "appnp")
        op = OperatorSpec::appnp(0.1);
    else
        throw ConfigError("unknown operator kind '" + kind + "'");
    read(j, "alpha", op.alpha, "operator");
    op.truncation = read_count(j, "truncation", op.truncation, "operator");
    read(j, "relu", op.terminal_relu, "operator");
    try {
        op.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    return op;
}

inline json operator_json(const OperatorSpec &op) {
    json j;
    switch (op.kind) {
    case OperatorKind::RandomWalk: j["kind"] = "random_walk"; break;
    case OperatorKind::Symmetric: j["kind"] = "symmetric"; break;
    case OperatorKind::Ppnp:
        j["kind"] = "ppnp";
        j["alpha"] = op.alpha;
        j["truncation"] = op.truncation;
        break;
    case OperatorKind::Appnp:
        j["kind"] = "appnp";
        j["alpha"] = op.alpha;
        break;
    }
    j["relu"] = op.terminal_relu;
    return j;
}

inline DecisionRule parse_rule(const std::string &s) {
    if (s == "train_midpoint")
        return DecisionRule::TrainMidpoint;
    if (s == "population_midpoint")
        return DecisionRule::PopulationMidpoint;
    throw ConfigError("decision_rule must be train_midpoint or population_midpoint");
}

} // namespace detail

/// Parses a schema-1 configuration document. Relative paths resolve against
/// `base_dir` (the directory holding the config file).
inline ExperimentConfig parse_config(const json &doc, const std::filesystem::path &base_dir = {}) {
    using namespace detail;
    check_keys(doc, "config",
               {"schema_version", "model", "operators", "n_max", "trials", "split", "concentration",
                "decision_rule", "horizon", "workers", "seed", "output", "verify"});
    int version = kSchemaVersion;
    read(doc, "schema_version", version, "config");
    if (version != kSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(version));

    ExperimentConfig c;
    if (!doc.contains("model"))
        throw ConfigError("config needs a 'model' section");
    const auto &m = doc.at("model");
    std::string type;
    if (m.is_object())
        read(m, "type", type, "model");
    if (type == "csbm") {
        check_keys(m, "model", {"type", "n_nodes", "p_intra", "q_inter", "mu1", "mu2", "sigma2",
                                "feature_dim"});
        CsbmParams p;
        p.n_nodes = read_count(m, "n_nodes", p.n_nodes, "model");
        read(m, "p_intra", p.p_intra, "model");
        read(m, "q_inter", p.q_inter, "model");
        read(m, "mu1", p.mu1, "model");
        read(m, "mu2", p.mu2, "model");
        read(m, "sigma2", p.sigma2, "model");
        p.feature_dim = read_count(m, "feature_dim", p.feature_dim, "model");
        try {
            p.validate();
        } catch (const InvalidArgument &e) {
            throw ConfigError(e.what());
        }
        c.csbm = p;
    } else if (type == "ingest") {
        c.ingest = parse_paths(m, "model", base_dir, true);
    } else {
        throw ConfigError("model.type must be 'csbm' or 'ingest'");
    }

    if (doc.contains("operators")) {
        const auto &ops = doc.at("operators");
        if (!ops.is_array() || ops.empty())
            throw ConfigError("operators must be a nonempty array");
        c.operators.clear();
        for (const auto &o : ops)
            c.operators.push_back(parse_operator(o));
    }
    c.n_max = read_count(doc, "n_max", c.n_max, "config");
    c.trials = read_count(doc, "trials", c.trials, "config");
    c.horizon = read_count(doc, "horizon", c.horizon, "config");
    c.workers = read_count(doc, "workers", c.workers, "config");
    read(doc, "seed", c.seed, "config");

    if (doc.contains("split")) {
        const auto &s = doc.at("split");
        check_keys(s, "split", {"train", "val", "test"});
        read(s, "train", c.split.train, "split");
        read(s, "val", c.split.val, "split");
        read(s, "test", c.split.test, "split");
    }
    if (doc.contains("concentration")) {
        const auto &s = doc.at("concentration");
        check_keys(s, "concentration", {"r_exponent", "constant_C", "horizon_K"});
        read(s, "r_exponent", c.concentration.r_exponent, "concentration");
        read(s, "constant_C", c.concentration.constant_C, "concentration");
        c.concentration.horizon_K = read_count(s, "horizon_K", c.concentration.horizon_K, "concentration");
    }
    if (doc.contains("decision_rule")) {
        std::string r;
        read(doc, "decision_rule", r, "config");
        c.decision_rule = parse_rule(r);
    }
    if (doc.contains("output")) {
        const auto &o = doc.at("output");
        check_keys(o, "output", {"path", "format"});
        if (o.contains("path")) {
            std::string p;
            read(o, "path", p, "output");
            c.output_path = resolve(p, base_dir);
        }
        std::string f = "csv";
        read(o, "format", f, "output");
        if (f == "csv")
            c.output_format = OutputFormat::Csv;
        else if (f == "json")
            c.output_format = OutputFormat::Json;
        else
            throw ConfigError("output.format must be csv or json");
    }
    if (doc.contains("verify")) {
        const auto &v = doc.at("verify");
        check_keys(v, "verify",
                   {"max_depth", "neighborhood_depth", "limit_depth", "limit_tolerance", "sym_graphs",
                    "sym_max_nodes", "sym_depths", "increase_tolerance", "relu_depth",
                    "pass_threshold", "graph"});
        auto &o = c.verify;
        o.max_depth = read_count(v, "max_depth", o.max_depth, "verify");
        o.neighborhood_depth = read_count(v, "neighborhood_depth", o.neighborhood_depth, "verify");
        o.limit_depth = read_count(v, "limit_depth", o.limit_depth, "verify");
        read(v, "limit_tolerance", o.limit_tolerance, "verify");
        o.sym_graphs = read_count(v, "sym_graphs", o.sym_graphs, "verify");
        o.sym_max_nodes = read_count(v, "sym_max_nodes", o.sym_max_nodes, "verify");
        o.sym_depths = read_count(v, "sym_depths", o.sym_depths, "verify");
        read(v, "increase_tolerance", o.increase_tolerance, "verify");
        o.relu_depth = read_count(v, "relu_depth", o.relu_depth, "verify");
        read(v, "pass_threshold", o.pass_threshold, "verify");
        if (v.contains("graph"))
            c.verify_graph = parse_paths(v.at("graph"), "verify.graph", base_dir, false);
    }
    return c;
}

/// Checks cross-field constraints after command-line overrides are applied.
inline void validate(const ExperimentConfig &c) {
    if (c.trials < 1)
        throw ConfigError("trials must be >= 1");
    if (c.workers < 1)
        throw ConfigError("workers must be >= 1");
    try {
        c.split.validate();
        c.concentration.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc, std::filesystem::path(path).parent_path());
}

/// Canonical JSON of everything that determines the results (the worker count
/// and the output destination are excluded). Keys are emitted sorted.
inline json canonical_json(const ExperimentConfig &c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    if (c.csbm) {
        const auto &p = *c.csbm;
        j["model"] = {{"type", "csbm"},       {"n_nodes", p.n_nodes}, {"p_intra", p.p_intra},
                      {"q_inter", p.q_inter}, {"mu1", p.mu1},         {"mu2", p.mu2},
                      {"sigma2", p.sigma2},   {"feature_dim", p.feature_dim}};
    } else if (c.ingest) {
        j["model"] = {{"type", "ingest"}, {"edges", c.ingest->edges}, {"labels", c.ingest->labels}};
        if (c.ingest->features)
            j["model"]["features"] = *c.ingest->features;
    }
    j["operators"] = json::array();
    for (const auto &op : c.operators)
        j["operators"].push_back(detail::operator_json(op));
    j["n_max"] = c.n_max;
    j["trials"] = c.trials;
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    j["concentration"] = {{"r_exponent", c.concentration.r_exponent},
                          {"constant_C", c.concentration.constant_C},
                          {"horizon_K", c.concentration.horizon_K}};
    j["decision_rule"] = to_string(c.rule());
    j["horizon"] = c.horizon;
    j["seed"] = c.seed;
    const auto &v = c.verify;
    j["verify"] = {{"max_depth", v.max_depth},
                   {"neighborhood_depth", v.neighborhood_depth},
                   {"limit_depth", v.limit_depth},
                   {"limit_tolerance", v.limit_tolerance},
                   {"sym_graphs", v.sym_graphs},
                   {"sym_max_nodes", v.sym_max_nodes},
                   {"sym_depths", v.sym_depths},
                   {"increase_tolerance", v.increase_tolerance},
                   {"relu_depth", v.relu_depth},
                   {"pass_threshold", v.pass_threshold}};
    if (c.verify_graph)
        j["verify"]["graph"] = {{"edges", c.verify_graph->edges}, {"labels", c.verify_graph->labels}};
    return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig &c) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << fnv1a(canonical_json(c).dump());
    return out.str();
}

/// Verification options with the experiment-level fields folded in.
inline VerifyOptions verify_options(const ExperimentConfig &c) {
    VerifyOptions o = c.verify;
    o.trials = c.trials;
    o.workers = c.workers;
    o.concentration = c.concentration;
    o.rule = c.rule();
    o.split = c.split;
    return o;
}

} // namespace csbm::cli
