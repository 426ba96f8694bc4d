#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "liqguard/cli.hpp"
#include "liqguard/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"liqguard: survival-analysis driven liquidation prevention toolkit"};
    app.set_version_flag("--version", liqguard::kToolVersion);

    std::string config_path;
    std::vector<std::string> overrides;
    bool force = false;

    app.add_option("--config,-c", config_path,
                   "JSON run config (falls back to $LIQGUARD_CONFIG)");
    app.add_option("--set", overrides, "override a config key, e.g. --set trend.omega=0.9");
    app.add_flag("--force", force, "re-run the stage even if its artifact is up to date");
    app.require_subcommand(1);

    for (const char* name : {"ingest", "fit", "assess", "recommend", "replay", "report",
                             "sensitivity"}) {
        app.add_subcommand(name);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (config_path.empty()) {
        if (const char* env = std::getenv("LIQGUARD_CONFIG")) config_path = env;
    }
    if (config_path.empty()) {
        std::cerr << "no config given (use --config or LIQGUARD_CONFIG)\n";
        return 1;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        auto cfg = liqguard::cli::load_config(config_path, overrides);
        return liqguard::cli::run(command, cfg, force);
    } catch (const liqguard::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == liqguard::ErrorKind::config ? 1 : 2;
    }
}
