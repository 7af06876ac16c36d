#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "bsosim/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bsosim: driven two-level dynamics beyond the rotating-wave "
                 "approximation, phase teleportation over entangled pairs, and "
                 "remote-oscillator frequency locking"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        std::uint64_t seed = 1;
        std::vector<std::string> sets;
    };

    std::vector<std::pair<bsosim::Experiment, Args>> jobs;
    for (bsosim::Experiment e :
         {bsosim::Experiment::BsoScan, bsosim::Experiment::SolverCompare,
          bsosim::Experiment::Reversal, bsosim::Experiment::Teleport,
          bsosim::Experiment::PhaseRecover, bsosim::Experiment::LockScan,
          bsosim::Experiment::LockLoop}) {
        auto* sub = app.add_subcommand(bsosim::experiment_name(e));
        auto args = std::make_shared<Args>();
        args->out = std::string(bsosim::experiment_name(e)) + ".csv";
        sub->add_option("--config", args->config, "key=value file or a run manifest");
        sub->add_option("--seed", args->seed, "master RNG seed");
        sub->add_option("--out", args->out, "output CSV path");
        sub->add_option("--set", args->sets, "override: key=value (repeatable)");
        sub->callback([e, args, &jobs]() { jobs.emplace_back(e, *args); });
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& [exp, args] : jobs) {
        try {
            const bsosim::ExperimentConfig cfg = bsosim::parse_config(
                exp, args.config, args.sets, args.seed, args.out);
            const int rc = bsosim::run_experiment(cfg);
            if (rc != 0) return rc;
            std::cout << args.out << "\n";
        } catch (const std::exception& ex) {
            std::cerr << "error: " << ex.what() << "\n";
            return 1;
        }
    }
    return 0;
}
