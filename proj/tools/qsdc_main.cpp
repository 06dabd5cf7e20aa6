// qsdc: command-line front end for the simulator.
//
//   qsdc equivalence        Q-function distance between the two Werner families
//   qsdc entanglement-scan  PPT sweep over alpha
//   qsdc chsh               exact and sampled CHSH statistic
//   qsdc session            full protocol run
//   qsdc keyrate            key-rate formula curve

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "qsdc/cli.hpp"

namespace {

struct Flags {
    std::optional<std::string> config_path;
    qsdc::cli::ConfigOverrides overrides;
    std::optional<std::string> output;
    std::string format = "json";
    int grid = 200;
    double step = 0.01;
    unsigned threads = 1;
    bool timing = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "Flat key = value config file");
    cmd->add_option("--alpha", f.overrides.alpha, "Werner mixing parameter");
    cmd->add_option("--two-s", f.overrides.two_s, "Twice Bob's spin (2S)");
    cmd->add_option("--rounds", f.overrides.n_rounds, "Number of protocol rounds");
    cmd->add_option("--seed", f.overrides.seed, "Seed for every random draw");
    cmd->add_option("--eve", f.overrides.eve, "none | intercept-x | intercept-xz | depolarize");
    cmd->add_option("--eve-q", f.overrides.eve_q, "Depolarising weight in [0, 1]");
    cmd->add_option("--message-hex", f.overrides.message_hex, "Message to send, as hex");
    cmd->add_option("--output", f.output, "Write the report here instead of stdout");
    cmd->add_option("--format", f.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--threads", f.threads, "Worker threads for round generation");
    cmd->add_flag("--timing", f.timing, "Include wall-clock duration in the JSON report");
}

const std::map<std::string, std::string> kDescriptions = {
    {"equivalence", "Compare Q functions of the qubit pair and the qubit-qudit state"},
    {"entanglement-scan", "Sweep alpha and locate the PPT crossover"},
    {"chsh", "Exact and sampled CHSH statistic"},
    {"session", "Run one full protocol session"},
    {"keyrate", "Closed-form key rate and its alpha curve"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Separable-state QSDC simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qsdc::cli::kToolVersion));

    Flags flags;
    for (const auto& name : qsdc::cli::subcommands()) {
        auto* cmd = app.add_subcommand(name, kDescriptions.at(name));
        add_common(cmd, flags);
        if (name == "equivalence") cmd->add_option("--grid", flags.grid, "Fibonacci grid nodes per sphere");
        if (name == "entanglement-scan") cmd->add_option("--step", flags.step, "Alpha step of the sweep");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        qsdc::cli::CommandParams params;
        params.command = app.get_subcommands().front()->get_name();
        const bool session = params.command == "session";
        // Only `chsh` accepts zero rounds (exact value only).
        if (params.command == "chsh" && flags.overrides.n_rounds == std::uint64_t{0}) {
            auto overrides = flags.overrides;
            overrides.n_rounds.reset();
            params.config = qsdc::cli::load_config(flags.config_path, overrides, false);
            params.config.n_rounds = 0;
        } else {
            params.config = qsdc::cli::load_config(flags.config_path, flags.overrides, session);
        }
        params.grid = flags.grid;
        params.step = flags.step;
        params.threads = flags.threads;

        const auto out = qsdc::cli::dispatch(params);
        const std::string text =
            flags.format == "csv" ? out.csv : qsdc::cli::render_json(out.report, flags.timing);
        if (flags.output) {
            std::ofstream file(*flags.output, std::ios::binary);
            if (!file) {
                std::cerr << "error: cannot write " << *flags.output << "\n";
                return 2;
            }
            file << text;
        } else {
            std::cout << text;
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
