//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tools/main.cpp
//! Command-line front end. Exit codes: 0 success, 1 configuration or usage
//! error, 2 numerical failure (or warnings under --strict).
//---------------------------------------------------------------------------//
#include <exception>
#include <iostream>
#include <string>

#include <CLI/CLI.hpp>

#include "maglarmor/core.hpp"
#include "maglarmor/runner.hpp"

int main(int argc, char** argv)
{
    CLI::App app{
        "maglarmor: permanent-magnet field design and neutron spin "
        "simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version",
                         std::string("maglarmor ")
                             + maglarmor::version_string);

    auto describe = [](std::string const& name) -> std::string {
        if (name == "field")
            return "Sample field and gradients over the scoring box";
        if (name == "metrics")
            return "Action, gradient functional, and homogeneity metrics";
        if (name == "optimize")
            return "Run the topology or ring-direction design optimizer";
        if (name == "calibrate")
            return "Solve for the remanence or gap reaching a target action";
        if (name == "scan")
            return "Sweep gap, remanence, or current and fit the trend";
        if (name == "polarimeter")
            return "Spinor simulation of the guide-field polarimeter scan";
        if (name == "interferometer")
            return "Interferogram of the spin-rotation interferometer";
        if (name == "validate")
            return "Parse and validate a job configuration";
        return "Export a field map around the scoring box";
    };

    maglarmor::RunOptions opts;
    std::string selected;
    for (auto const& name : maglarmor::known_commands())
    {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", opts.config_path,
                        "Job configuration (JSON)")
            ->required();
        sub->add_option("--out", opts.out_dir,
                        "Output directory for artifacts");
        sub->add_flag("--strict", opts.strict,
                      "Treat warnings as errors (exit 2)");
        sub->add_option("--threads", opts.threads,
                        "Worker thread count (0 = auto)");
        sub->callback([&selected, name] { selected = name; });
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int code = app.exit(e);
        // CLI11 returns 0 for --help/--version; anything else is usage.
        return code == 0 ? 0 : 1;
    }

    try
    {
        auto warnings = maglarmor::run_command(selected, opts);
        for (auto const& w : warnings)
            std::cerr << "warning: " << w << '\n';
        std::cout << selected << ": ok (artifacts in " << opts.out_dir
                  << ")\n";
        return 0;
    }
    catch (maglarmor::ConfigError const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    catch (maglarmor::NumericalError const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
