#include <hbt/cli.hpp>
#include <hbt/config.hpp>
#include <hbt/error.hpp>

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Photon intensity-interferometry simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    hbt::cli::Overrides o;
    std::uint64_t seed = 0, flashes = 0;
    std::string out;

    app.add_option("--config", config_path, "JSON run configuration (defaults when omitted)");
    auto* seed_opt = app.add_option("--seed", seed, "Override flash.seed");
    auto* out_opt = app.add_option("--out", out, "Override output.dir");
    auto* flash_opt = app.add_option("--flashes", flashes, "Override flash.flash_count");
    app.add_option("--threads", o.threads, "Worker threads for flash generation")->check(CLI::PositiveNumber);

    for (const char* name : {"rates", "angle-scan", "energy-scan", "simulate", "fit", "npoint"})
        app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*seed_opt) o.seed = seed;
        if (*out_opt) o.out_dir = out;
        if (*flash_opt) o.flashes = flashes;
        const hbt::RunConfig cfg = config_path.empty() ? hbt::parse_config_text("{}") : hbt::parse_config(config_path);
        const std::string command = app.get_subcommands().front()->get_name();
        const auto result = hbt::cli::run(cfg, command, o);
        std::cout << result.summary << "\n";
        return 0;
    } catch (const hbt::ConfigError& e) {
        std::cerr << hbt::cli::error_json(e.code(), e.what()) << "\n";
        return 2;
    } catch (const hbt::Error& e) {
        std::cerr << hbt::cli::error_json(e.code(), e.what()) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << hbt::cli::error_json("internal", e.what()) << "\n";
        return 1;
    }
}
