// Command-line front end: run presets or JSON scenario files.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pwspec/scenario.hpp"

namespace {

int run_command(std::string const& target, std::optional<std::uint64_t> seed, std::optional<std::size_t> points,
                std::optional<std::string> out, unsigned threads, std::string const& format)
{
    pwspec::ScenarioConfig config;
    try {
        if (auto preset = pwspec::find_preset(target)) {
            config = *preset;
        } else if (std::filesystem::exists(target)) {
            config = pwspec::load_config(target);
        } else {
            std::cerr << "pwspec: '" << target << "' is neither a preset nor a config file\n";
            return pwspec::exit_config_error;
        }
    } catch (pwspec::ConfigError const& e) {
        std::cerr << "pwspec: config error: " << e.what() << "\n";
        return pwspec::exit_config_error;
    }
    if (seed)
        config.seed = *seed;
    if (points)
        config.n_points = *points;
    if (out)
        config.output_dir = *out;

    pwspec::RunOptions opts;
    opts.threads = threads;
    opts.format = format == "json" ? pwspec::OutputFormat::json : pwspec::OutputFormat::csv;
    auto const result = pwspec::run_scenario(config, opts);
    if (result.exit_code != pwspec::exit_success) {
        std::cerr << "pwspec: " << result.message << "\n";
    } else {
        std::cout << "wrote " << result.files.size() << " data files and " << result.manifest.string() << "\n";
        std::fprintf(stderr, "pwspec: finished in %.2f s\n", result.wall_time_seconds);
    }
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Nonequilibrium spectral lines of an ideal pilot-wave telescope"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a preset or a JSON scenario file");
    std::string target;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> points;
    std::optional<std::string> out;
    unsigned threads = 0;
    std::string format = "csv";
    run->add_option("target", target, "preset name or path to a config file")->required();
    run->add_option("--seed", seed, "master seed");
    run->add_option("--points", points, "ensemble size");
    run->add_option("--out", out, "output directory");
    run->add_option("--threads", threads, "worker threads (0 = all cores); never changes results");
    run->add_option("--format", format, "data file format")->check(CLI::IsMember({"csv", "json"}));

    auto* presets = app.add_subcommand("presets", "list the built-in presets");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : pwspec::exit_config_error;
    }

    if (*presets) {
        for (auto const& p : pwspec::list_presets())
            std::cout << p.name << "\t" << p.description << "\n";
        return 0;
    }
    return run_command(target, seed, points, out, threads, format);
}
