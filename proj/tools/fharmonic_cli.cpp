// Command-line front end: fharmonic <run|relax|check|blowup-experiment> CONFIG [-o DIR]

#include <iostream>

#include <CLI11.hpp>

#include "fharmonic/io/commands.hpp"

int main(int argc, char** argv) {
    using namespace fharm::io;
    CLI::App app{"f-weighted harmonic map flows on the periodic torus"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const CommandOptions&, std::ostream&, std::ostream&);
    };
    const Sub subs[] = {
        {"run", "evolve the configured flow and write the diagnostics ledger", cmd_run},
        {"relax", "relax to a discrete f-harmonic map with the gradient flow", cmd_relax},
        {"check", "print the pass/fail table of discrete identities", cmd_check},
        {"blowup-experiment", "seed a bubble near a critical point of f and track concentration",
         cmd_blowup_experiment},
    };

    std::string config;
    std::string output_dir;
    int rc = exit_io;
    for (const auto& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        cmd->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
        cmd->add_option("-o,--output-dir", output_dir, "override output.directory");
        cmd->callback([&, fn = s.fn] {
            CommandOptions opt{config, std::nullopt};
            if (!output_dir.empty()) opt.output_dir = output_dir;
            rc = fn(opt, std::cout, std::cerr);
        });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_io;
    }
    return rc;
}
