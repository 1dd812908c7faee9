#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hq/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Hessian quotient exterior-problem toolkit"};

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool strict = false;

    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory for artifacts");
    app.add_option("--seed", seed, "override the configuration seed")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    app.add_flag("--strict", strict, "reject unknown configuration keys");

    CLI11_PARSE(app, argc, argv);

    std::ifstream is(config_path);
    if (!is) {
        std::cerr << "config error: cannot open " << config_path << "\n";
        return hq::cli::exit_config_error;
    }

    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return hq::cli::exit_config_error;
    }

    try {
        hq::cli::RunConfig cfg = hq::cli::RunConfig::parse(j, strict);
        if (seed_given) cfg.seed = seed;
        return hq::cli::run(cfg, out_dir);
    } catch (const hq::configuration_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return hq::cli::exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hq::cli::exit_numerical;
    }
}
