// sim <command> --config <path> [--set key=value ...] --out <dir>

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Rydberg RF receiver simulator"};
    app.set_version_flag("--version", RYDBERG_VERSION);

    std::string command, config, out;
    std::vector<std::string> overrides;
    app.add_option("command", command, "spectrum | map | response | slopes | bandwidth | ratio | calibrate | oracle-check")
        ->required()
        ->check(CLI::IsMember(sim::command_names()));
    app.add_option("--config,-c", config, "JSON configuration file (defaults are used when omitted)");
    app.add_option("--set,-s", overrides, "override a configuration value, e.g. --set modulation.beta=0.3")
        ->allow_extra_args(false);
    app.add_option("--out,-o", out, "output directory");
    app.footer("Thread count: config key 'threads' or the RYDBERG_THREADS environment variable.\n"
               "Exit codes: 0 success, 1 check failed or I/O error, 2 configuration error, 3 numerical failure.");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : sim::kConfigError;
    }
    return sim::run(command, config, overrides, out, std::cout, std::cerr);
}
