#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmfsim/coincidence.hpp"
#include "pmfsim/config.hpp"
#include "pmfsim/entanglement.hpp"
#include "pmfsim/errors.hpp"
#include "pmfsim/fringe_analysis.hpp"
#include "pmfsim/io.hpp"

namespace pmfsim {

namespace fs = std::filesystem;

/// What a command produced: its output directory, the files written, and
/// human-readable summary lines for the terminal.
struct CommandOutcome {
    fs::path out_dir;
    std::vector<fs::path> files;
    std::vector<std::string> lines;
};

namespace detail {

inline void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline void emit(CommandOutcome& outcome, const fs::path& path, std::string_view content) {
    write_file(path, content);
    outcome.files.push_back(path);
}

inline bool wants_csv(OutputFormat f) { return f != OutputFormat::json; }
inline bool wants_json(OutputFormat f) { return f != OutputFormat::csv; }

inline std::string round3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace detail

/// Simulate the full scan set of one condition: one dataset per Alice
/// setting, with source and drift streams derived from (seed, repetition,
/// dataset index) so arms, datasets and repetitions never share randomness.
inline std::vector<FringeDataset> run_condition(const RunConfig& cfg,
                                                const BipartiteChannel& channel,
                                                std::uint64_t repetition = 0) {
    const BipartiteState rho0 = bell_state(BellState::psi_minus);
    const std::vector<double> axis = make_two_theta_b_axis(cfg);
    const std::uint64_t rep_seed = derive_seed(cfg.seed, repetition);
    std::vector<FringeDataset> datasets;
    datasets.reserve(cfg.theta_a_deg.size());
    for (std::size_t i = 0; i < cfg.theta_a_deg.size(); ++i) {
        const SourceParams src = make_source(cfg, derive_seed(rep_seed, 2 * i));
        const DriftModel drift = make_drift(cfg, derive_seed(rep_seed, 2 * i + 1));
        FringeDataset data = simulate_fringe(rho0, channel, drift, src,
                                             deg_to_rad(cfg.theta_a_deg[i]), axis,
                                             cfg.expectation);
        data.theta_a_deg = cfg.theta_a_deg[i]; // keep the exact configured value
        datasets.push_back(std::move(data));
    }
    return datasets;
}

// ---------------------------------------------------------------------------
// sweep-fidelity
// ---------------------------------------------------------------------------

inline CommandOutcome cmd_sweep_fidelity(const RunConfig& cfg) {
    const std::string resolved = resolved_config_text(cfg);
    const SweepRequest request = make_sweep_request(cfg);
    const std::vector<FidelityGrid> grids = sweep_fidelity(request);

    const std::vector<double> dl_axis_nm =
        arithmetic_axis(cfg.sweep_delta_length_min_nm, cfg.sweep_delta_length_max_nm,
                        cfg.sweep_delta_length_step_nm);
    const std::vector<double> theta_axis_deg =
        arithmetic_axis(cfg.sweep_misalignment_min_deg, cfg.sweep_misalignment_max_deg,
                        cfg.sweep_misalignment_step_deg);
    const std::vector<double> phi_axis_deg =
        arithmetic_axis(cfg.sweep_frame_offset_min_deg, cfg.sweep_frame_offset_max_deg,
                        cfg.sweep_frame_offset_step_deg);

    CommandOutcome outcome;
    outcome.out_dir = fs::path(cfg.output_directory) / ("sweep-" + content_hash_hex(resolved));
    detail::ensure_directory(outcome.out_dir);
    detail::emit(outcome, outcome.out_dir / "resolved.cfg", resolved);

    for (std::size_t g = 0; g < grids.size(); ++g) {
        const FidelityGrid& grid = grids[g];
        // rows carry the interface-unit axis values verbatim
        std::vector<GridRow> rows;
        rows.reserve(grid.fidelity.size());
        for (std::size_t it = 0; it < theta_axis_deg.size(); ++it) {
            for (std::size_t ip = 0; ip < phi_axis_deg.size(); ++ip) {
                const std::size_t k = grid.index(it, ip);
                rows.push_back({dl_axis_nm[g], theta_axis_deg[it], phi_axis_deg[ip],
                                grid.fidelity[k], grid.compensation[k].delta_a_rad,
                                grid.compensation[k].delta_b_rad});
            }
        }
        const std::string stem = "fidelity_dL_" + format_double(dl_axis_nm[g]) + "nm";
        if (detail::wants_csv(cfg.output_format))
            detail::emit(outcome, outcome.out_dir / (stem + ".csv"), write_grid_csv(rows));
        if (detail::wants_json(cfg.output_format)) {
            json j = grid_json(grid);
            j["delta_length_nm"] = dl_axis_nm[g];
            detail::emit(outcome, outcome.out_dir / (stem + ".json"), j.dump(2) + "\n");
        }
        const auto [lo, hi] = std::minmax_element(grid.fidelity.begin(), grid.fidelity.end());
        outcome.lines.push_back("panel dL=" + format_double(dl_axis_nm[g]) +
                                "nm: fidelity min=" + format_double(*lo) +
                                " max=" + format_double(*hi));
    }
    outcome.lines.push_back("wrote " + std::to_string(grids.size()) + " panels to " +
                            outcome.out_dir.string());
    return outcome;
}

// ---------------------------------------------------------------------------
// simulate-fringe
// ---------------------------------------------------------------------------

inline CommandOutcome cmd_simulate_fringe(const RunConfig& cfg) {
    const std::string resolved = resolved_config_text(cfg);
    const BipartiteChannel channel = make_channel(cfg);
    const std::vector<FringeDataset> datasets = run_condition(cfg, channel);

    CommandOutcome outcome;
    outcome.out_dir = fs::path(cfg.output_directory) / ("fringe-" + content_hash_hex(resolved));
    detail::ensure_directory(outcome.out_dir);
    detail::emit(outcome, outcome.out_dir / "resolved.cfg", resolved);

    for (const FringeDataset& data : datasets) {
        const std::string stem = "fringe_thetaA_" + format_double(data.theta_a_deg) + "deg";
        if (detail::wants_csv(cfg.output_format)) {
            const fs::path csv_path = outcome.out_dir / (stem + ".csv");
            detail::emit(outcome, csv_path, write_fringe_csv(data));
            detail::emit(outcome, metadata_path_for(csv_path),
                         fringe_metadata_json(data).dump(2) + "\n");
        }
        if (detail::wants_json(cfg.output_format))
            detail::emit(outcome, outcome.out_dir / (stem + ".json"),
                         fringe_dataset_json(data).dump(2) + "\n");

        std::string line = "thetaA=" + format_double(data.theta_a_deg) + "deg:";
        for (DetectorPair pairing : {DetectorPair::a1b1, DetectorPair::a2b1}) {
            try {
                const VisibilityReport r =
                    analyze_fringe(data, pairing, ExtremaMethod::pointwise);
                line += std::string(" V(") + to_string(pairing) +
                        ")=" + detail::round3(r.visibility);
            } catch (const Error&) {
                line += std::string(" V(") + to_string(pairing) + ")=n/a";
            }
        }
        line += " [pointwise]";
        outcome.lines.push_back(std::move(line));
    }
    outcome.lines.push_back("condition '" + channel.label + "': wrote " +
                            std::to_string(datasets.size()) + " datasets to " +
                            outcome.out_dir.string());
    return outcome;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

inline CommandOutcome cmd_analyze(const std::vector<fs::path>& inputs, ExtremaMethod method,
                                  AmplitudeDefinition amplitude_def, const fs::path& out_root,
                                  OutputFormat format, std::string condition_label = "") {
    if (inputs.empty()) throw ConfigError("inputs", "no dataset files given");

    std::vector<FringeDataset> datasets;
    std::string hash_input = std::string(to_string(method)) + "|" +
                             to_string(amplitude_def) + "|" + condition_label + "\n";
    for (const fs::path& path : inputs) {
        const std::string csv_text = read_file(path);
        const fs::path meta = metadata_path_for(path);
        if (!fs::exists(meta)) throw IoError("missing metadata sidecar: " + meta.string());
        const std::string meta_text = read_file(meta);
        FringeDataset data = parse_fringe_metadata(meta_text);
        data.points = parse_fringe_csv(csv_text);
        datasets.push_back(std::move(data));
        hash_input += path.string() + "\n" + csv_text + meta_text;
    }

    if (condition_label.empty()) {
        condition_label = datasets.front().channel_label;
        for (const FringeDataset& d : datasets)
            if (d.channel_label != condition_label) condition_label = "mixed";
    }

    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < datasets.size(); ++i)
        for (DetectorPair pairing : {DetectorPair::a1b1, DetectorPair::a2b1})
            rows.push_back(ReportRow{
                inputs[i].filename().string(),
                analyze_fringe(datasets[i], pairing, method, amplitude_def)});
    const FringeSummary summary = summarize(datasets, method, amplitude_def, condition_label);

    CommandOutcome outcome;
    outcome.out_dir = out_root / ("analyze-" + content_hash_hex(hash_input));
    detail::ensure_directory(outcome.out_dir);

    std::string manifest = "method = " + std::string(to_string(method)) +
                           "\namplitude_definition = " + to_string(amplitude_def) +
                           "\ncondition_label = " + condition_label + "\n";
    for (const fs::path& path : inputs) manifest += "input = " + path.string() + "\n";
    detail::emit(outcome, outcome.out_dir / "manifest.txt", manifest);

    if (detail::wants_csv(format)) {
        detail::emit(outcome, outcome.out_dir / "report.csv", write_report_csv(rows));
        detail::emit(outcome, outcome.out_dir / "summary.csv", write_summary_csv({summary}));
    }
    if (detail::wants_json(format)) {
        detail::emit(outcome, outcome.out_dir / "report.json", report_json(rows).dump(2) + "\n");
        detail::emit(outcome, outcome.out_dir / "summary.json",
                     summary_json({summary}).dump(2) + "\n");
    }

    for (const ReportRow& row : rows) {
        const VisibilityReport& r = row.report;
        outcome.lines.push_back("thetaA=" + format_double(r.theta_a_deg) + "deg " +
                                to_string(r.pairing) + ": V=" + detail::round3(r.visibility) +
                                " sigma_V=" + detail::round3(r.sigma_v));
    }
    outcome.lines.push_back("condition '" + summary.condition_label +
                            "': avg V=" + detail::round3(summary.avg_visibility) +
                            " avg sigma_V=" + detail::round3(summary.avg_sigma_v) + " [" +
                            to_string(method) + "]");
    return outcome;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Repetition statistics of one condition plus the per-repetition values
/// used for the ordering counts.
struct ConditionStats {
    ComparisonRow row;
    std::vector<double> visibility;
    std::vector<double> sigma_v;
};

namespace detail {

inline ConditionStats compare_condition(const RunConfig& cfg, int repetitions) {
    const BipartiteChannel channel = make_channel(cfg);
    ConditionStats stats;
    stats.row.condition_label = cfg.effective_label();
    stats.row.repetitions = static_cast<std::uint64_t>(repetitions);
    stats.row.method = cfg.analysis_method;
    for (int r = 0; r < repetitions; ++r) {
        const std::vector<FringeDataset> datasets =
            run_condition(cfg, channel, static_cast<std::uint64_t>(r));
        const FringeSummary s = summarize(datasets, cfg.analysis_method,
                                          cfg.amplitude_definition, cfg.effective_label());
        stats.visibility.push_back(s.avg_visibility);
        stats.sigma_v.push_back(s.avg_sigma_v);
    }
    auto mean = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    };
    auto sample_std = [&mean](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    stats.row.visibility_mean = mean(stats.visibility);
    stats.row.visibility_std = sample_std(stats.visibility);
    stats.row.sigma_v_mean = mean(stats.sigma_v);
    stats.row.sigma_v_std = sample_std(stats.sigma_v);
    return stats;
}

} // namespace detail

inline CommandOutcome cmd_compare(const RunConfig& cfg_a, const RunConfig& cfg_b,
                                  int repetitions) {
    if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
    const std::string resolved_a = resolved_config_text(cfg_a);
    const std::string resolved_b = resolved_config_text(cfg_b);

    const ConditionStats a = detail::compare_condition(cfg_a, repetitions);
    const ConditionStats b = detail::compare_condition(cfg_b, repetitions);

    int v_a_higher = 0, sv_a_higher = 0;
    for (int r = 0; r < repetitions; ++r) {
        if (a.visibility[r] > b.visibility[r]) ++v_a_higher;
        if (a.sigma_v[r] > b.sigma_v[r]) ++sv_a_higher;
    }

    CommandOutcome outcome;
    outcome.out_dir =
        fs::path(cfg_a.output_directory) /
        ("compare-" + content_hash_hex(resolved_a + resolved_b +
                                       "repetitions=" + std::to_string(repetitions) + "\n"));
    detail::ensure_directory(outcome.out_dir);
    detail::emit(outcome, outcome.out_dir / "resolved_a.cfg", resolved_a);
    detail::emit(outcome, outcome.out_dir / "resolved_b.cfg", resolved_b);

    const std::vector<ComparisonRow> rows{a.row, b.row};
    if (detail::wants_csv(cfg_a.output_format))
        detail::emit(outcome, outcome.out_dir / "comparison.csv", write_comparison_csv(rows));
    if (detail::wants_json(cfg_a.output_format)) {
        auto row_json = [](const ComparisonRow& r) {
            return json{{"condition_label", r.condition_label},
                        {"repetitions", r.repetitions},
                        {"visibility_mean", r.visibility_mean},
                        {"visibility_std", r.visibility_std},
                        {"sigma_v_mean", r.sigma_v_mean},
                        {"sigma_v_std", r.sigma_v_std},
                        {"method", to_string(r.method)}};
        };
        const json j{{"schema", "comparison/1"},
                     {"repetitions", repetitions},
                     {"condition_a", row_json(a.row)},
                     {"condition_b", row_json(b.row)},
                     {"orderings",
                      {{"visibility_a_higher", v_a_higher},
                       {"sigma_v_a_higher", sv_a_higher}}}};
        detail::emit(outcome, outcome.out_dir / "comparison.json", j.dump(2) + "\n");
    }

    for (const ComparisonRow& r : rows)
        outcome.lines.push_back("condition '" + r.condition_label +
                                "': V=" + detail::round3(r.visibility_mean) + " +/- " +
                                detail::round3(r.visibility_std) +
                                ", sigma_V=" + detail::round3(r.sigma_v_mean) + " +/- " +
                                detail::round3(r.sigma_v_std) + " over " +
                                std::to_string(repetitions) + " repetitions [" +
                                to_string(r.method) + "]");
    outcome.lines.push_back("ordering: visibility('" + a.row.condition_label + "') > ('" +
                            b.row.condition_label + "') in " + std::to_string(v_a_higher) +
                            "/" + std::to_string(repetitions) + " repetitions");
    outcome.lines.push_back("ordering: sigma_V('" + a.row.condition_label + "') > ('" +
                            b.row.condition_label + "') in " + std::to_string(sv_a_higher) +
                            "/" + std::to_string(repetitions) + " repetitions");
    return outcome;
}

} // namespace pmfsim
