// Command-line front end: sweep-fidelity, simulate-fringe, analyze, compare.
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmfsim/commands.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_io = 3;
constexpr int exit_schema = 4;
constexpr int exit_other = 1;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
    auto* opt = cmd->add_option("--config", flags.config_path, "simulation config file");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--out", flags.out, "override the output directory");
    cmd->add_option("--format", flags.format, "output format: csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
}

pmfsim::RunConfig load_config(const CommonFlags& flags) {
    pmfsim::RunConfig cfg = pmfsim::parse_config(pmfsim::read_file(flags.config_path));
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out) cfg.output_directory = *flags.out;
    if (flags.format) {
        if (*flags.format == "csv") cfg.output_format = pmfsim::OutputFormat::csv;
        else if (*flags.format == "json") cfg.output_format = pmfsim::OutputFormat::json;
        else cfg.output_format = pmfsim::OutputFormat::both;
    }
    pmfsim::validate_config(cfg);
    return cfg;
}

void print_outcome(const pmfsim::CommandOutcome& outcome) {
    for (const std::string& line : outcome.lines) std::printf("%s\n", line.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polarization-entanglement fiber channel simulator"};
    app.require_subcommand(1);

    CommonFlags sweep_flags;
    CLI::App* sweep = app.add_subcommand("sweep-fidelity",
                                         "fidelity vs length mismatch and misalignment");
    add_common(sweep, sweep_flags);

    CommonFlags sim_flags;
    bool sim_expectation = false;
    CLI::App* sim = app.add_subcommand("simulate-fringe",
                                       "simulate coincidence fringe datasets");
    add_common(sim, sim_flags);
    sim->add_flag("--expectation", sim_expectation,
                  "record expected counts instead of sampled counts");

    std::vector<std::string> analyze_inputs;
    std::string analyze_method = "pointwise";
    std::string analyze_ampdef = "peak_to_peak";
    std::string analyze_out = "out";
    std::string analyze_format = "csv";
    std::string analyze_label;
    CLI::App* analyze = app.add_subcommand("analyze",
                                           "visibility statistics from fringe CSV files");
    analyze->add_option("inputs", analyze_inputs, "fringe CSV files (with .meta.json sidecars)")
        ->required();
    analyze->add_option("--method", analyze_method, "extrema method: pointwise or cosine_fit")
        ->check(CLI::IsMember({"pointwise", "cosine_fit"}));
    analyze->add_option("--amplitude", analyze_ampdef,
                        "amplitude definition: peak_to_peak or max_count")
        ->check(CLI::IsMember({"peak_to_peak", "max_count"}));
    analyze->add_option("--out", analyze_out, "output directory root");
    analyze->add_option("--format", analyze_format, "output format: csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    analyze->add_option("--label", analyze_label, "condition label for the summary row");

    CommonFlags compare_a, compare_b;
    int compare_reps = 10;
    CLI::App* compare = app.add_subcommand("compare",
                                           "repeated-run visibility comparison of two conditions");
    compare->add_option("--config-a", compare_a.config_path, "first condition config")->required();
    compare->add_option("--config-b", compare_b.config_path, "second condition config")->required();
    compare->add_option("--repetitions", compare_reps, "independent repetitions per condition")
        ->check(CLI::PositiveNumber);
    compare->add_option("--seed", compare_a.seed, "override both config seeds");
    compare->add_option("--out", compare_a.out, "override the output directory");
    compare->add_option("--format", compare_a.format, "output format: csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }

    try {
        if (*sweep) {
            print_outcome(pmfsim::cmd_sweep_fidelity(load_config(sweep_flags)));
        } else if (*sim) {
            pmfsim::RunConfig cfg = load_config(sim_flags);
            if (sim_expectation) cfg.expectation = true;
            print_outcome(pmfsim::cmd_simulate_fringe(cfg));
        } else if (*analyze) {
            std::vector<pmfsim::fs::path> inputs(analyze_inputs.begin(), analyze_inputs.end());
            const pmfsim::ExtremaMethod method = analyze_method == "cosine_fit"
                                                     ? pmfsim::ExtremaMethod::cosine_fit
                                                     : pmfsim::ExtremaMethod::pointwise;
            const pmfsim::AmplitudeDefinition ampdef =
                analyze_ampdef == "max_count" ? pmfsim::AmplitudeDefinition::max_count
                                              : pmfsim::AmplitudeDefinition::peak_to_peak;
            pmfsim::OutputFormat format = pmfsim::OutputFormat::csv;
            if (analyze_format == "json") format = pmfsim::OutputFormat::json;
            else if (analyze_format == "both") format = pmfsim::OutputFormat::both;
            print_outcome(pmfsim::cmd_analyze(inputs, method, ampdef, analyze_out, format,
                                              analyze_label));
        } else if (*compare) {
            compare_b.seed = compare_a.seed;
            compare_b.out = compare_a.out;
            compare_b.format = compare_a.format;
            print_outcome(pmfsim::cmd_compare(load_config(compare_a), load_config(compare_b),
                                              compare_reps));
        }
    } catch (const pmfsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const pmfsim::SchemaError& e) {
        std::fprintf(stderr, "schema error: %s\n", e.what());
        return exit_schema;
    } catch (const pmfsim::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return exit_io;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_other;
    }
    return exit_ok;
}
