#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "csbm/cli/commands.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--config", o.config, "JSON experiment configuration")->required();
    cmd->add_option("--out", o.out, "output file (default: config output.path, else stdout)");
    cmd->add_option("--seed", o.seed, "override the configuration seed");
    cmd->add_option("--trials", o.trials, "override the number of trials");
    cmd->add_option("--workers", o.workers, "worker threads (results do not depend on it)");
}

template <class Run>
int execute(const Overrides &o, Run run) {
    using namespace csbm;
    try {
        auto config = cli::load_config(o.config);
        if (o.seed)
            config.seed = *o.seed;
        if (o.trials)
            config.trials = *o.trials;
        if (o.workers)
            config.workers = *o.workers;
        if (o.out)
            config.output_path = *o.out;
        cli::validate(config);

        // Buffer the whole result so a failing run never leaves a partial file.
        std::ostringstream buffer;
        const int code = run(config, buffer);
        if (config.output_path) {
            std::ofstream file(*config.output_path, std::ios::binary);
            if (!file)
                throw cli::ConfigError("cannot write output file '" + *config.output_path + "'");
            file << buffer.str();
        } else {
            std::cout << buffer.str();
        }
        return code;
    } catch (const cli::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const BoundsError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const DegenerateGraphError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidArgument &e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Linear GNN oversmoothing laboratory on the contextual stochastic block model"};
    app.set_version_flag("--version", csbm::cli::tool_version());
    app.require_subcommand(1);

    Overrides o;
    std::string statement;
    auto *sweep = app.add_subcommand("sweep", "layerwise accuracy and mixing/denoising sweep (CSV)");
    auto *theory = app.add_subcommand("theory", "closed-form mean gap, variance and z-score bounds (CSV)");
    auto *predict = app.add_subcommand("predict-depth", "break-even and optimal depth intervals (JSON)");
    auto *verify = app.add_subcommand("verify", "Monte Carlo check of one statement (JSON)");
    auto *ingest = app.add_subcommand("ingest", "per-depth class statistics of an external graph (CSV)");
    for (auto *cmd : {sweep, theory, predict, verify, ingest})
        add_common(cmd, o);
    verify->add_option("statement", statement,
                       "MeanGap, VarianceBounds, DegreeConcentration, NeighborhoodBound, "
                       "VarianceLimit, SymMonotone or ReluNoGain")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    using csbm::cli::ExperimentConfig;
    auto with = [&](auto command) {
        return execute(o, [&](const ExperimentConfig &c, std::ostream &out) {
            return command(c, out, std::cerr);
        });
    };
    if (*sweep)
        return with(csbm::cli::cmd_sweep);
    if (*theory)
        return with(csbm::cli::cmd_theory);
    if (*predict)
        return with(csbm::cli::cmd_predict_depth);
    if (*ingest)
        return with(csbm::cli::cmd_ingest);
    return execute(o, [&](const ExperimentConfig &c, std::ostream &out) {
        return csbm::cli::cmd_verify(statement, c, out, std::cerr);
    });
}
