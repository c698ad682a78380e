#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hadamard/cli.hpp"

using namespace hadamard::cli;

int main(int argc, char** argv) {
    CLI::App app{"Experiments on Cauchy problems for non-hyperbolic systems"};
    app.require_subcommand(1);

    std::string config_path, output_dir, manifest_path;

    auto* run_cmd = app.add_subcommand("run", "Run one experiment config");
    run_cmd->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--output-dir,-o", output_dir, "Overrides output_dir from the config");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep_cmd->add_option("config", config_path, "JSON sweep file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--output-dir,-o", output_dir, "Overrides output_dir from the sweep file");

    auto* rerun_cmd = app.add_subcommand("rerun", "Re-run the config recorded in a manifest");
    rerun_cmd->add_option("manifest", manifest_path, "manifest.json of a previous run")
        ->required()
        ->check(CLI::ExistingFile);
    rerun_cmd->add_option("--output-dir,-o", output_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) {
            auto cfg = load_config(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            const auto r = run(cfg);
            std::cout << r.report.dump(2) << "\n";
            if (!r.message.empty()) std::cerr << r.message << "\n";
            return r.status;
        }
        if (*sweep_cmd) {
            std::ifstream is(config_path);
            std::stringstream ss;
            ss << is.rdbuf();
            const auto j = parse_json_strict(ss.str());
            auto configs = expand_sweep(j);
            if (output_dir.empty()) output_dir = j.value("output_dir", "");
            const auto res = sweep(configs, output_dir);
            for (std::size_t i = 0; i < res.runs.size(); ++i)
                std::cout << res.runs[i].config.output_dir << "  status " << res.runs[i].status
                          << (res.runs[i].message.empty() ? "" : "  " + res.runs[i].message) << "\n";
            return res.status;
        }
        const auto r = rerun_from_manifest(manifest_path, output_dir);
        std::cout << r.report.dump(2) << "\n";
        return r.status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_status_for(e);
    }
}
