#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmfsim/coincidence.hpp"
#include "pmfsim/entanglement.hpp"
#include "pmfsim/errors.hpp"
#include "pmfsim/fiber.hpp"
#include "pmfsim/fringe_analysis.hpp"
#include "pmfsim/io.hpp"

namespace pmfsim {

enum class FiberType { smf, pmf_cross };
enum class DriftKind { none, smf_walk, pmf_jitter };
enum class CompensationMode { optimize, optimize_alice, fixed };
enum class OutputFormat { csv, json, both };

inline const char* to_string(FiberType t) { return t == FiberType::smf ? "smf" : "pmf_cross"; }
inline const char* to_string(DriftKind d) {
    switch (d) {
    case DriftKind::none: return "none";
    case DriftKind::smf_walk: return "smf_walk";
    case DriftKind::pmf_jitter: return "pmf_jitter";
    }
    return "?";
}
inline const char* to_string(CompensationMode m) {
    switch (m) {
    case CompensationMode::optimize: return "optimize";
    case CompensationMode::optimize_alice: return "optimize_alice";
    case CompensationMode::fixed: return "fixed";
    }
    return "?";
}
inline const char* to_string(OutputFormat f) {
    switch (f) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::both: return "both";
    }
    return "?";
}

/// Fully resolved run configuration. Angles are in the units named by the
/// config keys (degrees at the interface); builders convert to radians/SI.
struct RunConfig {
    std::uint64_t seed = 12345;

    // channel
    FiberType fiber_type = FiberType::pmf_cross;
    double length_m = 1.0;
    double wavelength_nm = 810.0;
    bool use_pmd_coefficient = false; ///< true when pmd coefficient replaces delta_n
    double delta_n = constants::default_delta_n;
    double pmd_coefficient_ps_sqrt_km = 0.0;
    double group_index = constants::default_group_index;
    double delta_length_nm = 0.0;
    double delta_length_b_nm = 0.0; ///< Bob's arm; mirrors delta_length_nm unless set
    double misalignment_deg = 0.0;
    double frame_offset_deg = 0.0;
    DriftKind drift = DriftKind::none;
    double drift_scale_rad = 0.0;
    int drift_correlation_steps = 1;
    double jitter_sigma_rad = 0.0;

    // compensation
    CompensationMode compensation_mode = CompensationMode::optimize;
    double compensation_delta_a_deg = 0.0;
    double compensation_delta_b_deg = 0.0;

    // source
    double pump_mw = 2.0;
    double pair_rate_per_mw_hz = 7650.0;
    double heralding_eta = 0.17;
    double coincidence_window_ns = 8.0;
    double integration_time_s = 1.0;
    double dark_rate_hz = 0.0;
    bool expectation = false;

    // fringe scan
    std::vector<double> theta_a_deg{0.0, 22.5};
    double two_theta_b_start_deg = 0.0;
    double two_theta_b_stop_deg = 180.0;
    int two_theta_b_points = 37;

    // sweep
    double sweep_misalignment_min_deg = -15.0;
    double sweep_misalignment_max_deg = 15.0;
    double sweep_misalignment_step_deg = 1.0;
    double sweep_frame_offset_min_deg = -15.0;
    double sweep_frame_offset_max_deg = 15.0;
    double sweep_frame_offset_step_deg = 1.0;
    double sweep_delta_length_min_nm = -8.0;
    double sweep_delta_length_max_nm = 8.0;
    double sweep_delta_length_step_nm = 2.0;
    double sweep_arm_b_extra_delta_length_nm = 0.0;

    // analysis
    ExtremaMethod analysis_method = ExtremaMethod::pointwise;
    AmplitudeDefinition amplitude_definition = AmplitudeDefinition::peak_to_peak;

    // labeling and output
    std::string condition_label; ///< empty: derived from fiber type + drift
    std::string output_directory = "out";
    OutputFormat output_format = OutputFormat::csv;

    std::string effective_label() const {
        if (!condition_label.empty()) return condition_label;
        return std::string(to_string(fiber_type)) + "-" +
               (drift == DriftKind::none ? "stable" : "unstable");
    }
};

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline double config_double(const std::string& key, std::string_view value) {
    double out = 0.0;
    const std::string_view v = trim(value);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key, "expected a number, got '" + std::string(value) + "'");
    return out;
}

inline std::uint64_t config_u64(const std::string& key, std::string_view value) {
    std::uint64_t out = 0;
    const std::string_view v = trim(value);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key, "expected an unsigned integer, got '" + std::string(value) + "'");
    return out;
}

inline int config_int(const std::string& key, std::string_view value) {
    int out = 0;
    const std::string_view v = trim(value);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key, "expected an integer, got '" + std::string(value) + "'");
    return out;
}

inline bool config_bool(const std::string& key, std::string_view value) {
    const std::string_view v = trim(value);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key, "expected true or false, got '" + std::string(value) + "'");
}

inline std::vector<double> config_double_list(const std::string& key, std::string_view value) {
    std::vector<double> out;
    std::size_t start = 0;
    const std::string text(value);
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(config_double(key, std::string_view(text).substr(start, comma - start)));
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError(key, "expected at least one number");
    return out;
}

} // namespace detail

/// Key/value pairs in file order; comments (#) and blank lines removed.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t line_no = 0;
    for (const std::string& raw : split_lines(text)) {
        ++line_no;
        std::string_view line = raw;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("", "line " + std::to_string(line_no) +
                                      ": expected key = value, got '" + std::string(line) + "'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty())
            throw ConfigError("", "line " + std::to_string(line_no) + ": empty key");
        entries.emplace_back(key, value);
    }
    return entries;
}

inline ExtremaMethod parse_method_config(const std::string& key, const std::string& value);
inline void validate_config(const RunConfig& cfg);

/// Apply parsed entries onto the defaults and validate the result.
inline RunConfig resolve_config(const std::vector<std::pair<std::string, std::string>>& entries) {
    RunConfig cfg;
    bool delta_length_b_set = false;
    bool delta_n_set = false;
    bool pmd_set = false;

    std::vector<std::string> seen;
    for (const auto& [key, value] : entries) {
        for (const std::string& s : seen)
            if (s == key) throw ConfigError(key, "duplicate key");
        seen.push_back(key);

        using namespace detail;
        if (key == "seed") cfg.seed = config_u64(key, value);
        else if (key == "channel.fiber_type") {
            if (value == "smf") cfg.fiber_type = FiberType::smf;
            else if (value == "pmf_cross") cfg.fiber_type = FiberType::pmf_cross;
            else throw ConfigError(key, "expected smf or pmf_cross, got '" + value + "'");
        }
        else if (key == "channel.length_m") cfg.length_m = config_double(key, value);
        else if (key == "channel.wavelength_nm") cfg.wavelength_nm = config_double(key, value);
        else if (key == "channel.delta_n") {
            cfg.delta_n = config_double(key, value);
            delta_n_set = true;
        }
        else if (key == "channel.pmd_coefficient_ps_sqrt_km") {
            cfg.pmd_coefficient_ps_sqrt_km = config_double(key, value);
            cfg.use_pmd_coefficient = true;
            pmd_set = true;
        }
        else if (key == "channel.group_index") cfg.group_index = config_double(key, value);
        else if (key == "channel.delta_length_nm") cfg.delta_length_nm = config_double(key, value);
        else if (key == "channel.delta_length_b_nm") {
            cfg.delta_length_b_nm = config_double(key, value);
            delta_length_b_set = true;
        }
        else if (key == "channel.misalignment_deg") cfg.misalignment_deg = config_double(key, value);
        else if (key == "channel.frame_offset_deg") cfg.frame_offset_deg = config_double(key, value);
        else if (key == "channel.drift") {
            if (value == "none") cfg.drift = DriftKind::none;
            else if (value == "smf_walk") cfg.drift = DriftKind::smf_walk;
            else if (value == "pmf_jitter") cfg.drift = DriftKind::pmf_jitter;
            else throw ConfigError(key, "expected none, smf_walk or pmf_jitter, got '" + value + "'");
        }
        else if (key == "channel.drift_scale_rad") cfg.drift_scale_rad = config_double(key, value);
        else if (key == "channel.drift_correlation_steps")
            cfg.drift_correlation_steps = config_int(key, value);
        else if (key == "channel.jitter_sigma_rad") cfg.jitter_sigma_rad = config_double(key, value);
        else if (key == "compensation.mode") {
            if (value == "optimize") cfg.compensation_mode = CompensationMode::optimize;
            else if (value == "optimize_alice") cfg.compensation_mode = CompensationMode::optimize_alice;
            else if (value == "fixed") cfg.compensation_mode = CompensationMode::fixed;
            else throw ConfigError(key, "expected optimize, optimize_alice or fixed, got '" + value + "'");
        }
        else if (key == "compensation.delta_a_deg") cfg.compensation_delta_a_deg = config_double(key, value);
        else if (key == "compensation.delta_b_deg") cfg.compensation_delta_b_deg = config_double(key, value);
        else if (key == "source.pump_mw") cfg.pump_mw = config_double(key, value);
        else if (key == "source.pair_rate_per_mw_hz") cfg.pair_rate_per_mw_hz = config_double(key, value);
        else if (key == "source.heralding_eta") cfg.heralding_eta = config_double(key, value);
        else if (key == "source.coincidence_window_ns") cfg.coincidence_window_ns = config_double(key, value);
        else if (key == "source.integration_time_s") cfg.integration_time_s = config_double(key, value);
        else if (key == "source.dark_rate_hz") cfg.dark_rate_hz = config_double(key, value);
        else if (key == "source.expectation") cfg.expectation = config_bool(key, value);
        else if (key == "fringe.theta_a_deg") cfg.theta_a_deg = config_double_list(key, value);
        else if (key == "fringe.two_theta_b_start_deg") cfg.two_theta_b_start_deg = config_double(key, value);
        else if (key == "fringe.two_theta_b_stop_deg") cfg.two_theta_b_stop_deg = config_double(key, value);
        else if (key == "fringe.two_theta_b_points") cfg.two_theta_b_points = config_int(key, value);
        else if (key == "sweep.misalignment_min_deg") cfg.sweep_misalignment_min_deg = config_double(key, value);
        else if (key == "sweep.misalignment_max_deg") cfg.sweep_misalignment_max_deg = config_double(key, value);
        else if (key == "sweep.misalignment_step_deg") cfg.sweep_misalignment_step_deg = config_double(key, value);
        else if (key == "sweep.frame_offset_min_deg") cfg.sweep_frame_offset_min_deg = config_double(key, value);
        else if (key == "sweep.frame_offset_max_deg") cfg.sweep_frame_offset_max_deg = config_double(key, value);
        else if (key == "sweep.frame_offset_step_deg") cfg.sweep_frame_offset_step_deg = config_double(key, value);
        else if (key == "sweep.delta_length_min_nm") cfg.sweep_delta_length_min_nm = config_double(key, value);
        else if (key == "sweep.delta_length_max_nm") cfg.sweep_delta_length_max_nm = config_double(key, value);
        else if (key == "sweep.delta_length_step_nm") cfg.sweep_delta_length_step_nm = config_double(key, value);
        else if (key == "sweep.arm_b_extra_delta_length_nm")
            cfg.sweep_arm_b_extra_delta_length_nm = config_double(key, value);
        else if (key == "analysis.method") cfg.analysis_method = parse_method_config(key, value);
        else if (key == "analysis.amplitude_definition") {
            if (value == "peak_to_peak") cfg.amplitude_definition = AmplitudeDefinition::peak_to_peak;
            else if (value == "max_count") cfg.amplitude_definition = AmplitudeDefinition::max_count;
            else throw ConfigError(key, "expected peak_to_peak or max_count, got '" + value + "'");
        }
        else if (key == "condition.label") cfg.condition_label = value;
        else if (key == "output.directory") {
            if (value.empty()) throw ConfigError(key, "expected a directory path");
            cfg.output_directory = value;
        }
        else if (key == "output.format") {
            if (value == "csv") cfg.output_format = OutputFormat::csv;
            else if (value == "json") cfg.output_format = OutputFormat::json;
            else if (value == "both") cfg.output_format = OutputFormat::both;
            else throw ConfigError(key, "expected csv, json or both, got '" + value + "'");
        }
        else throw ConfigError(key, "unknown key");
    }

    if (delta_n_set && pmd_set)
        throw ConfigError("channel.delta_n",
                          "channel.delta_n and channel.pmd_coefficient_ps_sqrt_km are alternatives; set one");
    if (!delta_length_b_set) cfg.delta_length_b_nm = cfg.delta_length_nm;

    validate_config(cfg);
    return cfg;
}

inline ExtremaMethod parse_method_config(const std::string& key, const std::string& value) {
    if (value == "pointwise") return ExtremaMethod::pointwise;
    if (value == "cosine_fit") return ExtremaMethod::cosine_fit;
    throw ConfigError(key, "expected pointwise or cosine_fit, got '" + value + "'");
}

inline void validate_config(const RunConfig& cfg) {
    auto require = [](bool ok, const char* key, const char* message) {
        if (!ok) throw ConfigError(key, message);
    };
    auto finite_positive = [](double v) { return v > 0.0 && std::isfinite(v); };

    require(finite_positive(cfg.length_m), "channel.length_m", "must be positive");
    require(finite_positive(cfg.wavelength_nm), "channel.wavelength_nm", "must be positive");
    if (cfg.use_pmd_coefficient)
        require(finite_positive(cfg.pmd_coefficient_ps_sqrt_km),
                "channel.pmd_coefficient_ps_sqrt_km", "must be positive");
    else
        require(finite_positive(cfg.delta_n), "channel.delta_n", "must be positive");
    require(cfg.group_index >= 1.0 && std::isfinite(cfg.group_index), "channel.group_index",
            "must be >= 1");
    require(std::isfinite(cfg.delta_length_nm) &&
                std::abs(cfg.delta_length_nm) * 1e-9 < cfg.length_m,
            "channel.delta_length_nm", "|delta_length| must be smaller than the fiber length");
    require(std::isfinite(cfg.delta_length_b_nm) &&
                std::abs(cfg.delta_length_b_nm) * 1e-9 < cfg.length_m,
            "channel.delta_length_b_nm", "|delta_length| must be smaller than the fiber length");
    require(std::isfinite(cfg.misalignment_deg), "channel.misalignment_deg", "must be finite");
    require(std::isfinite(cfg.frame_offset_deg), "channel.frame_offset_deg", "must be finite");
    require(cfg.drift_scale_rad >= 0.0 && std::isfinite(cfg.drift_scale_rad),
            "channel.drift_scale_rad", "must be >= 0");
    require(cfg.drift_correlation_steps >= 1, "channel.drift_correlation_steps", "must be >= 1");
    require(cfg.jitter_sigma_rad >= 0.0 && std::isfinite(cfg.jitter_sigma_rad),
            "channel.jitter_sigma_rad", "must be >= 0");
    require(std::isfinite(cfg.compensation_delta_a_deg), "compensation.delta_a_deg",
            "must be finite");
    require(std::isfinite(cfg.compensation_delta_b_deg), "compensation.delta_b_deg",
            "must be finite");
    require(finite_positive(cfg.pump_mw), "source.pump_mw", "must be positive");
    require(finite_positive(cfg.pair_rate_per_mw_hz), "source.pair_rate_per_mw_hz",
            "must be positive");
    require(cfg.heralding_eta > 0.0 && cfg.heralding_eta <= 1.0, "source.heralding_eta",
            "must be in (0, 1]");
    require(finite_positive(cfg.coincidence_window_ns), "source.coincidence_window_ns",
            "must be positive");
    require(finite_positive(cfg.integration_time_s), "source.integration_time_s",
            "must be positive");
    require(cfg.dark_rate_hz >= 0.0 && std::isfinite(cfg.dark_rate_hz), "source.dark_rate_hz",
            "must be >= 0");
    require(!cfg.theta_a_deg.empty(), "fringe.theta_a_deg", "must list at least one angle");
    for (double t : cfg.theta_a_deg)
        require(std::isfinite(t), "fringe.theta_a_deg", "angles must be finite");
    require(cfg.two_theta_b_points >= 1, "fringe.two_theta_b_points", "must be >= 1");
    require(std::isfinite(cfg.two_theta_b_start_deg), "fringe.two_theta_b_start_deg",
            "must be finite");
    require(std::isfinite(cfg.two_theta_b_stop_deg), "fringe.two_theta_b_stop_deg",
            "must be finite");
    if (cfg.two_theta_b_points > 1)
        require(cfg.two_theta_b_stop_deg > cfg.two_theta_b_start_deg,
                "fringe.two_theta_b_stop_deg", "must exceed the start angle");

    auto axis_ok = [&](double lo, double hi, double step, const char* key) {
        require(std::isfinite(lo) && std::isfinite(hi) && hi >= lo, key,
                "max must be >= min and finite");
        require(finite_positive(step), key, "step must be positive");
    };
    axis_ok(cfg.sweep_misalignment_min_deg, cfg.sweep_misalignment_max_deg,
            cfg.sweep_misalignment_step_deg, "sweep.misalignment_step_deg");
    axis_ok(cfg.sweep_frame_offset_min_deg, cfg.sweep_frame_offset_max_deg,
            cfg.sweep_frame_offset_step_deg, "sweep.frame_offset_step_deg");
    axis_ok(cfg.sweep_delta_length_min_nm, cfg.sweep_delta_length_max_nm,
            cfg.sweep_delta_length_step_nm, "sweep.delta_length_step_nm");
    require(std::isfinite(cfg.sweep_arm_b_extra_delta_length_nm),
            "sweep.arm_b_extra_delta_length_nm", "must be finite");
}

inline RunConfig parse_config(std::string_view text) {
    return resolve_config(parse_config_text(text));
}

// ---------------------------------------------------------------------------
// resolved-config echo and content hash
// ---------------------------------------------------------------------------

/// Canonical echo with every key present (defaults included), used both as
/// the reproducibility record and as the content-hash input.
inline std::string resolved_config_text(const RunConfig& cfg) {
    std::string out;
    auto put = [&out](std::string_view key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    put("seed", format_u64(cfg.seed));
    put("channel.fiber_type", to_string(cfg.fiber_type));
    put("channel.length_m", format_double(cfg.length_m));
    put("channel.wavelength_nm", format_double(cfg.wavelength_nm));
    if (cfg.use_pmd_coefficient)
        put("channel.pmd_coefficient_ps_sqrt_km", format_double(cfg.pmd_coefficient_ps_sqrt_km));
    else
        put("channel.delta_n", format_double(cfg.delta_n));
    put("channel.group_index", format_double(cfg.group_index));
    put("channel.delta_length_nm", format_double(cfg.delta_length_nm));
    put("channel.delta_length_b_nm", format_double(cfg.delta_length_b_nm));
    put("channel.misalignment_deg", format_double(cfg.misalignment_deg));
    put("channel.frame_offset_deg", format_double(cfg.frame_offset_deg));
    put("channel.drift", to_string(cfg.drift));
    put("channel.drift_scale_rad", format_double(cfg.drift_scale_rad));
    put("channel.drift_correlation_steps", std::to_string(cfg.drift_correlation_steps));
    put("channel.jitter_sigma_rad", format_double(cfg.jitter_sigma_rad));
    put("compensation.mode", to_string(cfg.compensation_mode));
    put("compensation.delta_a_deg", format_double(cfg.compensation_delta_a_deg));
    put("compensation.delta_b_deg", format_double(cfg.compensation_delta_b_deg));
    put("source.pump_mw", format_double(cfg.pump_mw));
    put("source.pair_rate_per_mw_hz", format_double(cfg.pair_rate_per_mw_hz));
    put("source.heralding_eta", format_double(cfg.heralding_eta));
    put("source.coincidence_window_ns", format_double(cfg.coincidence_window_ns));
    put("source.integration_time_s", format_double(cfg.integration_time_s));
    put("source.dark_rate_hz", format_double(cfg.dark_rate_hz));
    put("source.expectation", cfg.expectation ? "true" : "false");
    {
        std::string list;
        for (std::size_t i = 0; i < cfg.theta_a_deg.size(); ++i) {
            if (i) list += ", ";
            list += format_double(cfg.theta_a_deg[i]);
        }
        put("fringe.theta_a_deg", list);
    }
    put("fringe.two_theta_b_start_deg", format_double(cfg.two_theta_b_start_deg));
    put("fringe.two_theta_b_stop_deg", format_double(cfg.two_theta_b_stop_deg));
    put("fringe.two_theta_b_points", std::to_string(cfg.two_theta_b_points));
    put("sweep.misalignment_min_deg", format_double(cfg.sweep_misalignment_min_deg));
    put("sweep.misalignment_max_deg", format_double(cfg.sweep_misalignment_max_deg));
    put("sweep.misalignment_step_deg", format_double(cfg.sweep_misalignment_step_deg));
    put("sweep.frame_offset_min_deg", format_double(cfg.sweep_frame_offset_min_deg));
    put("sweep.frame_offset_max_deg", format_double(cfg.sweep_frame_offset_max_deg));
    put("sweep.frame_offset_step_deg", format_double(cfg.sweep_frame_offset_step_deg));
    put("sweep.delta_length_min_nm", format_double(cfg.sweep_delta_length_min_nm));
    put("sweep.delta_length_max_nm", format_double(cfg.sweep_delta_length_max_nm));
    put("sweep.delta_length_step_nm", format_double(cfg.sweep_delta_length_step_nm));
    put("sweep.arm_b_extra_delta_length_nm",
        format_double(cfg.sweep_arm_b_extra_delta_length_nm));
    put("analysis.method", to_string(cfg.analysis_method));
    put("analysis.amplitude_definition", to_string(cfg.amplitude_definition));
    put("condition.label", cfg.condition_label);
    put("output.directory", cfg.output_directory);
    put("output.format", to_string(cfg.output_format));
    return out;
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline std::string content_hash_hex(std::string_view text) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// builders: config -> domain objects
// ---------------------------------------------------------------------------

inline PmfSegment make_segment(const RunConfig& cfg) {
    PmfSegment seg;
    seg.length_m = cfg.length_m;
    seg.wavelength_m = cfg.wavelength_nm * 1e-9;
    seg.birefringence = cfg.use_pmd_coefficient
                            ? Birefringence::delay_coefficient_ps_sqrt_km(
                                  cfg.pmd_coefficient_ps_sqrt_km)
                            : Birefringence::delta_n(cfg.delta_n);
    seg.group_index = cfg.group_index;
    return seg;
}

/// Arm index 0 = Alice (lab frame reference), 1 = Bob (carries the frame offset).
inline CrossAlignedPair make_pair_for_arm(const RunConfig& cfg, int arm) {
    CrossAlignedPair pair;
    pair.base = make_segment(cfg);
    pair.delta_length_m = (arm == 0 ? cfg.delta_length_nm : cfg.delta_length_b_nm) * 1e-9;
    pair.misalignment_rad = deg_to_rad(cfg.misalignment_deg);
    pair.frame_offset_rad = arm == 0 ? 0.0 : deg_to_rad(cfg.frame_offset_deg);
    return pair;
}

inline DriftModel make_drift(const RunConfig& cfg, std::uint64_t drift_seed) {
    switch (cfg.drift) {
    case DriftKind::none: return std::monostate{};
    case DriftKind::smf_walk:
        return SmfDriftModel{cfg.drift_scale_rad, cfg.drift_correlation_steps, drift_seed};
    case DriftKind::pmf_jitter: return PmfPhaseJitter{cfg.jitter_sigma_rad, drift_seed};
    }
    return std::monostate{};
}

inline SourceParams make_source(const RunConfig& cfg, std::uint64_t source_seed) {
    SourceParams src;
    src.pump_mw = cfg.pump_mw;
    src.pair_rate_per_mw_hz = cfg.pair_rate_per_mw_hz;
    src.heralding_eta = cfg.heralding_eta;
    src.coincidence_window_s = cfg.coincidence_window_ns * 1e-9;
    src.integration_time_s = cfg.integration_time_s;
    src.dark_rate_hz = cfg.dark_rate_hz;
    src.seed = source_seed;
    return src;
}

/// Static per-arm channel with its compensation setting resolved (the
/// compensator is adjusted on the undrifted channel, as in the lab).
inline BipartiteChannel make_channel(const RunConfig& cfg) {
    BipartiteChannel channel;
    channel.label = cfg.effective_label();
    if (cfg.fiber_type == FiberType::pmf_cross) {
        channel.arm_a = cross_pair_exact(make_pair_for_arm(cfg, 0));
        channel.arm_b = cross_pair_exact(make_pair_for_arm(cfg, 1));
    }
    switch (cfg.compensation_mode) {
    case CompensationMode::fixed:
        channel.compensation = {deg_to_rad(cfg.compensation_delta_a_deg),
                                deg_to_rad(cfg.compensation_delta_b_deg)};
        break;
    case CompensationMode::optimize:
        channel.compensation = optimize_compensation(bell_state(BellState::psi_minus),
                                                     channel.arm_a, channel.arm_b)
                                   .setting;
        break;
    case CompensationMode::optimize_alice:
        channel.compensation =
            optimize_compensation(bell_state(BellState::psi_minus), channel.arm_a,
                                  channel.arm_b, CompensationSearch::alice_only)
                .setting;
        break;
    }
    return channel;
}

inline std::vector<double> arithmetic_axis(double lo, double hi, double step) {
    std::vector<double> axis;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    axis.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) axis.push_back(lo + k * step);
    return axis;
}

inline SweepRequest make_sweep_request(const RunConfig& cfg) {
    SweepRequest request;
    request.base = make_segment(cfg);
    for (double nm :
         arithmetic_axis(cfg.sweep_delta_length_min_nm, cfg.sweep_delta_length_max_nm,
                         cfg.sweep_delta_length_step_nm))
        request.delta_length_axis_m.push_back(nm * 1e-9);
    for (double deg :
         arithmetic_axis(cfg.sweep_misalignment_min_deg, cfg.sweep_misalignment_max_deg,
                         cfg.sweep_misalignment_step_deg))
        request.misalignment_axis_rad.push_back(deg_to_rad(deg));
    for (double deg :
         arithmetic_axis(cfg.sweep_frame_offset_min_deg, cfg.sweep_frame_offset_max_deg,
                         cfg.sweep_frame_offset_step_deg))
        request.frame_offset_axis_rad.push_back(deg_to_rad(deg));
    request.arm_b_extra_delta_length_m = cfg.sweep_arm_b_extra_delta_length_nm * 1e-9;
    return request;
}

inline std::vector<double> make_two_theta_b_axis(const RunConfig& cfg) {
    std::vector<double> axis;
    const int n = cfg.two_theta_b_points;
    axis.reserve(static_cast<std::size_t>(n));
    if (n == 1) {
        axis.push_back(cfg.two_theta_b_start_deg);
        return axis;
    }
    const double step = (cfg.two_theta_b_stop_deg - cfg.two_theta_b_start_deg) / (n - 1);
    for (int k = 0; k < n; ++k) axis.push_back(cfg.two_theta_b_start_deg + k * step);
    return axis;
}

} // namespace pmfsim
