#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pmfsim/coincidence.hpp"
#include "pmfsim/entanglement.hpp"
#include "pmfsim/errors.hpp"
#include "pmfsim/fringe_analysis.hpp"

namespace pmfsim {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// scalar formatting: shortest decimal that parses back to the same bits
// ---------------------------------------------------------------------------

inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t value) {
    return std::to_string(value);
}

inline double parse_double_cell(std::string_view cell, std::size_t line, std::size_t column) {
    double value = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw SchemaError("not a number: '" + std::string(cell) + "'", line, column);
    return value;
}

inline std::uint64_t parse_u64_cell(std::string_view cell, std::size_t line, std::size_t column) {
    std::uint64_t value = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw SchemaError("not an unsigned integer: '" + std::string(cell) + "'", line, column);
    return value;
}

// ---------------------------------------------------------------------------
// CSV primitives (RFC-4180-style minimal quoting)
// ---------------------------------------------------------------------------

inline std::string csv_escape(std::string_view cell) {
    if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(cells[i]);
    }
    out += '\n';
    return out;
}

/// Split one CSV line into cells, honoring quoted cells.
inline std::vector<std::string> csv_split(std::string_view row, std::size_t line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        const char c = row[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < row.size() && row[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            if (!cell.empty()) throw SchemaError("stray quote inside cell", line, i + 1);
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) throw SchemaError("unterminated quoted cell", line);
    cells.push_back(std::move(cell));
    return cells;
}

/// Split text into lines; accepts \n and \r\n, ignores one trailing newline.
inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        std::size_t len = end - start;
        if (len > 0 && text[start + len - 1] == '\r') --len;
        lines.emplace_back(text.substr(start, len));
        start = end + 1;
    }
    return lines;
}

inline void require_header(const std::vector<std::string>& lines, std::string_view expected) {
    if (lines.empty()) throw SchemaError("empty file", 1);
    if (lines[0] != expected)
        throw SchemaError("header mismatch: expected '" + std::string(expected) + "'", 1, 1);
}

inline std::vector<std::string> csv_data_row(const std::string& line_text, std::size_t line,
                                             std::size_t expected_cells) {
    std::vector<std::string> cells = csv_split(line_text, line);
    if (cells.size() != expected_cells)
        throw SchemaError("expected " + std::to_string(expected_cells) + " cells, found " +
                              std::to_string(cells.size()),
                          line, 1);
    return cells;
}

// ---------------------------------------------------------------------------
// files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return std::move(buf).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// fringe dataset: CSV of points + JSON metadata sidecar
// ---------------------------------------------------------------------------

inline constexpr std::string_view fringe_csv_header =
    "two_theta_b_deg,cAB_11,cAB_21,cAB_12,cAB_22,"
    "singles_a1,singles_a2,singles_b1,singles_b2,integration_s";

inline std::string write_fringe_csv(const FringeDataset& data) {
    std::string out(fringe_csv_header);
    out += '\n';
    for (const FringePoint& pt : data.points) {
        out += csv_row({format_double(pt.two_theta_b_deg), format_double(pt.coincidences[0]),
                        format_double(pt.coincidences[1]), format_double(pt.coincidences[2]),
                        format_double(pt.coincidences[3]), format_double(pt.singles_a1),
                        format_double(pt.singles_a2), format_double(pt.singles_b1),
                        format_double(pt.singles_b2), format_double(pt.integration_s)});
    }
    return out;
}

inline std::vector<FringePoint> parse_fringe_csv(std::string_view text) {
    const std::vector<std::string> lines = split_lines(text);
    require_header(lines, fringe_csv_header);
    std::vector<FringePoint> points;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t line = i + 1;
        const auto cells = csv_data_row(lines[i], line, 10);
        FringePoint pt;
        pt.two_theta_b_deg = parse_double_cell(cells[0], line, 1);
        for (int j = 0; j < 4; ++j) {
            pt.coincidences[j] = parse_double_cell(cells[1 + j], line, 2 + j);
            if (pt.coincidences[j] < 0.0)
                throw SchemaError("negative coincidence count", line, 2 + j);
        }
        pt.singles_a1 = parse_double_cell(cells[5], line, 6);
        pt.singles_a2 = parse_double_cell(cells[6], line, 7);
        pt.singles_b1 = parse_double_cell(cells[7], line, 8);
        pt.singles_b2 = parse_double_cell(cells[8], line, 9);
        pt.integration_s = parse_double_cell(cells[9], line, 10);
        if (pt.singles_a1 < 0.0 || pt.singles_a2 < 0.0 || pt.singles_b1 < 0.0 ||
            pt.singles_b2 < 0.0)
            throw SchemaError("negative singles count", line, 6);
        const double tol = 1e-9;
        if (pt.singles_a1 + tol < pt.coincidences[0] + pt.coincidences[2] ||
            pt.singles_a2 + tol < pt.coincidences[1] + pt.coincidences[3] ||
            pt.singles_b1 + tol < pt.coincidences[0] + pt.coincidences[1] ||
            pt.singles_b2 + tol < pt.coincidences[2] + pt.coincidences[3])
            throw SchemaError("singles below their coincidences", line, 6);
        points.push_back(pt);
    }
    return points;
}

inline constexpr std::string_view fringe_metadata_schema = "fringe-metadata/1";

inline json fringe_metadata_json(const FringeDataset& data) {
    return json{
        {"schema", std::string(fringe_metadata_schema)},
        {"theta_a_deg", data.theta_a_deg},
        {"channel_label", data.channel_label},
        {"expectation", data.expectation},
        {"estimated_accidental_rate_hz", data.estimated_accidental_rate_hz},
        {"source",
         {{"pump_mw", data.source.pump_mw},
          {"pair_rate_per_mw_hz", data.source.pair_rate_per_mw_hz},
          {"heralding_eta", data.source.heralding_eta},
          {"coincidence_window_s", data.source.coincidence_window_s},
          {"integration_time_s", data.source.integration_time_s},
          {"dark_rate_hz", data.source.dark_rate_hz},
          {"seed", data.source.seed}}},
    };
}

/// Parse the sidecar into a dataset shell (no points).
inline FringeDataset parse_fringe_metadata(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("metadata JSON: ") + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != fringe_metadata_schema)
            throw SchemaError("metadata JSON: unknown schema marker");
        FringeDataset data;
        data.theta_a_deg = j.at("theta_a_deg").get<double>();
        data.channel_label = j.at("channel_label").get<std::string>();
        data.expectation = j.at("expectation").get<bool>();
        data.estimated_accidental_rate_hz = j.at("estimated_accidental_rate_hz").get<double>();
        const json& s = j.at("source");
        data.source.pump_mw = s.at("pump_mw").get<double>();
        data.source.pair_rate_per_mw_hz = s.at("pair_rate_per_mw_hz").get<double>();
        data.source.heralding_eta = s.at("heralding_eta").get<double>();
        data.source.coincidence_window_s = s.at("coincidence_window_s").get<double>();
        data.source.integration_time_s = s.at("integration_time_s").get<double>();
        data.source.dark_rate_hz = s.at("dark_rate_hz").get<double>();
        data.source.seed = s.at("seed").get<std::uint64_t>();
        return data;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("metadata JSON: ") + e.what());
    }
}

inline std::filesystem::path metadata_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p += ".meta.json";
    return p;
}

inline void save_fringe_dataset(const std::filesystem::path& csv_path,
                                const FringeDataset& data) {
    write_file(csv_path, write_fringe_csv(data));
    write_file(metadata_path_for(csv_path), fringe_metadata_json(data).dump(2) + "\n");
}

inline FringeDataset load_fringe_dataset(const std::filesystem::path& csv_path) {
    const std::filesystem::path meta = metadata_path_for(csv_path);
    if (!std::filesystem::exists(meta))
        throw IoError("missing metadata sidecar: " + meta.string());
    FringeDataset data = parse_fringe_metadata(read_file(meta));
    data.points = parse_fringe_csv(read_file(csv_path));
    return data;
}

/// Full single-file JSON mirror of a dataset (points + metadata).
inline json fringe_dataset_json(const FringeDataset& data) {
    json points = json::array();
    for (const FringePoint& pt : data.points) {
        points.push_back({{"two_theta_b_deg", pt.two_theta_b_deg},
                          {"cAB_11", pt.coincidences[0]},
                          {"cAB_21", pt.coincidences[1]},
                          {"cAB_12", pt.coincidences[2]},
                          {"cAB_22", pt.coincidences[3]},
                          {"singles_a1", pt.singles_a1},
                          {"singles_a2", pt.singles_a2},
                          {"singles_b1", pt.singles_b1},
                          {"singles_b2", pt.singles_b2},
                          {"integration_s", pt.integration_s}});
    }
    json j = fringe_metadata_json(data);
    j["points"] = std::move(points);
    return j;
}

// ---------------------------------------------------------------------------
// fidelity grid: one CSV (+ JSON mirror) per length-mismatch panel
// ---------------------------------------------------------------------------

inline constexpr std::string_view grid_csv_header =
    "delta_length_nm,theta_deg,phi_deg,fidelity,delta_a_rad,delta_b_rad";

/// One grid row as stored on disk (interface units).
struct GridRow {
    double delta_length_nm = 0.0;
    double theta_deg = 0.0;
    double phi_deg = 0.0;
    double fidelity = 0.0;
    double delta_a_rad = 0.0;
    double delta_b_rad = 0.0;
};

inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }
inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }

inline std::vector<GridRow> grid_rows(const FidelityGrid& grid) {
    std::vector<GridRow> rows;
    rows.reserve(grid.fidelity.size());
    for (std::size_t it = 0; it < grid.misalignment_axis_rad.size(); ++it) {
        for (std::size_t ip = 0; ip < grid.frame_offset_axis_rad.size(); ++ip) {
            const std::size_t k = grid.index(it, ip);
            rows.push_back({grid.delta_length_m * 1e9,
                            rad_to_deg(grid.misalignment_axis_rad[it]),
                            rad_to_deg(grid.frame_offset_axis_rad[ip]), grid.fidelity[k],
                            grid.compensation[k].delta_a_rad, grid.compensation[k].delta_b_rad});
        }
    }
    return rows;
}

inline std::string write_grid_csv(const std::vector<GridRow>& rows) {
    std::string out(grid_csv_header);
    out += '\n';
    for (const GridRow& r : rows) {
        out += csv_row({format_double(r.delta_length_nm), format_double(r.theta_deg),
                        format_double(r.phi_deg), format_double(r.fidelity),
                        format_double(r.delta_a_rad), format_double(r.delta_b_rad)});
    }
    return out;
}

inline std::vector<GridRow> parse_grid_csv(std::string_view text) {
    const std::vector<std::string> lines = split_lines(text);
    require_header(lines, grid_csv_header);
    std::vector<GridRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t line = i + 1;
        const auto cells = csv_data_row(lines[i], line, 6);
        GridRow r;
        r.delta_length_nm = parse_double_cell(cells[0], line, 1);
        r.theta_deg = parse_double_cell(cells[1], line, 2);
        r.phi_deg = parse_double_cell(cells[2], line, 3);
        r.fidelity = parse_double_cell(cells[3], line, 4);
        if (r.fidelity < 0.0 || r.fidelity > 1.0)
            throw SchemaError("fidelity outside [0, 1]", line, 4);
        r.delta_a_rad = parse_double_cell(cells[4], line, 5);
        r.delta_b_rad = parse_double_cell(cells[5], line, 6);
        rows.push_back(r);
    }
    return rows;
}

inline json grid_json(const FidelityGrid& grid) {
    json fidelity = json::array();
    json delta_a = json::array();
    json delta_b = json::array();
    for (std::size_t it = 0; it < grid.misalignment_axis_rad.size(); ++it) {
        json frow = json::array(), arow = json::array(), brow = json::array();
        for (std::size_t ip = 0; ip < grid.frame_offset_axis_rad.size(); ++ip) {
            const std::size_t k = grid.index(it, ip);
            frow.push_back(grid.fidelity[k]);
            arow.push_back(grid.compensation[k].delta_a_rad);
            brow.push_back(grid.compensation[k].delta_b_rad);
        }
        fidelity.push_back(std::move(frow));
        delta_a.push_back(std::move(arow));
        delta_b.push_back(std::move(brow));
    }
    json theta = json::array(), phi = json::array();
    for (double t : grid.misalignment_axis_rad) theta.push_back(rad_to_deg(t));
    for (double p : grid.frame_offset_axis_rad) phi.push_back(rad_to_deg(p));
    return json{{"schema", "fidelity-grid/1"},
                {"delta_length_nm", grid.delta_length_m * 1e9},
                {"theta_deg", std::move(theta)},
                {"phi_deg", std::move(phi)},
                {"fidelity", std::move(fidelity)},
                {"delta_a_rad", std::move(delta_a)},
                {"delta_b_rad", std::move(delta_b)}};
}

// ---------------------------------------------------------------------------
// per-fringe visibility reports
// ---------------------------------------------------------------------------

inline constexpr std::string_view report_csv_header =
    "source,theta_a_deg,pairing,method,c_max,c_min,sigma_max,sigma_min,"
    "visibility,sigma_v,normalization_factor,average_amplitude";

/// VisibilityReport plus the file it came from.
struct ReportRow {
    std::string source;
    VisibilityReport report{};
};

inline ExtremaMethod parse_method_token(std::string_view token, std::size_t line = 0,
                                        std::size_t column = 0) {
    if (token == "pointwise") return ExtremaMethod::pointwise;
    if (token == "cosine_fit") return ExtremaMethod::cosine_fit;
    throw SchemaError("unknown method '" + std::string(token) + "'", line, column);
}

inline DetectorPair parse_pairing_token(std::string_view token, std::size_t line = 0,
                                        std::size_t column = 0) {
    for (DetectorPair p : all_detector_pairs)
        if (token == to_string(p)) return p;
    throw SchemaError("unknown pairing '" + std::string(token) + "'", line, column);
}

inline std::string write_report_csv(const std::vector<ReportRow>& rows) {
    std::string out(report_csv_header);
    out += '\n';
    for (const ReportRow& row : rows) {
        const VisibilityReport& r = row.report;
        out += csv_row({row.source, format_double(r.theta_a_deg), to_string(r.pairing),
                        to_string(r.method), format_double(r.c_max), format_double(r.c_min),
                        format_double(r.sigma_max), format_double(r.sigma_min),
                        format_double(r.visibility), format_double(r.sigma_v),
                        format_double(r.normalization_factor),
                        format_double(r.average_amplitude)});
    }
    return out;
}

inline std::vector<ReportRow> parse_report_csv(std::string_view text) {
    const std::vector<std::string> lines = split_lines(text);
    require_header(lines, report_csv_header);
    std::vector<ReportRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t line = i + 1;
        const auto cells = csv_data_row(lines[i], line, 12);
        ReportRow row;
        row.source = cells[0];
        row.report.theta_a_deg = parse_double_cell(cells[1], line, 2);
        row.report.pairing = parse_pairing_token(cells[2], line, 3);
        row.report.method = parse_method_token(cells[3], line, 4);
        row.report.c_max = parse_double_cell(cells[4], line, 5);
        row.report.c_min = parse_double_cell(cells[5], line, 6);
        row.report.sigma_max = parse_double_cell(cells[6], line, 7);
        row.report.sigma_min = parse_double_cell(cells[7], line, 8);
        row.report.visibility = parse_double_cell(cells[8], line, 9);
        row.report.sigma_v = parse_double_cell(cells[9], line, 10);
        row.report.normalization_factor = parse_double_cell(cells[10], line, 11);
        row.report.average_amplitude = parse_double_cell(cells[11], line, 12);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json report_json(const std::vector<ReportRow>& rows) {
    json arr = json::array();
    for (const ReportRow& row : rows) {
        const VisibilityReport& r = row.report;
        arr.push_back({{"source", row.source},
                       {"theta_a_deg", r.theta_a_deg},
                       {"pairing", to_string(r.pairing)},
                       {"method", to_string(r.method)},
                       {"c_max", r.c_max},
                       {"c_min", r.c_min},
                       {"sigma_max", r.sigma_max},
                       {"sigma_min", r.sigma_min},
                       {"visibility", r.visibility},
                       {"sigma_v", r.sigma_v},
                       {"normalization_factor", r.normalization_factor},
                       {"average_amplitude", r.average_amplitude}});
    }
    return json{{"schema", "fringe-report/1"}, {"fringes", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// condition summaries (one row per condition, Table-style metric order)
// ---------------------------------------------------------------------------

inline constexpr std::string_view summary_csv_header =
    "condition_label,normalization_factor,avg_amplitude,avg_visibility,avg_sigma_v,method";

inline std::string write_summary_csv(const std::vector<FringeSummary>& summaries) {
    std::string out(summary_csv_header);
    out += '\n';
    for (const FringeSummary& s : summaries) {
        out += csv_row({s.condition_label, format_double(s.normalization_factor),
                        format_double(s.avg_amplitude), format_double(s.avg_visibility),
                        format_double(s.avg_sigma_v), to_string(s.method)});
    }
    return out;
}

inline std::vector<FringeSummary> parse_summary_csv(std::string_view text) {
    const std::vector<std::string> lines = split_lines(text);
    require_header(lines, summary_csv_header);
    std::vector<FringeSummary> summaries;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t line = i + 1;
        const auto cells = csv_data_row(lines[i], line, 6);
        FringeSummary s;
        s.condition_label = cells[0];
        s.normalization_factor = parse_double_cell(cells[1], line, 2);
        s.avg_amplitude = parse_double_cell(cells[2], line, 3);
        s.avg_visibility = parse_double_cell(cells[3], line, 4);
        s.avg_sigma_v = parse_double_cell(cells[4], line, 5);
        s.method = parse_method_token(cells[5], line, 6);
        summaries.push_back(std::move(s));
    }
    return summaries;
}

inline json summary_json(const std::vector<FringeSummary>& summaries) {
    json arr = json::array();
    for (const FringeSummary& s : summaries) {
        arr.push_back({{"condition_label", s.condition_label},
                       {"normalization_factor", s.normalization_factor},
                       {"avg_amplitude", s.avg_amplitude},
                       {"avg_visibility", s.avg_visibility},
                       {"avg_sigma_v", s.avg_sigma_v},
                       {"method", to_string(s.method)}});
    }
    return json{{"schema", "fringe-summary/1"}, {"conditions", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// condition comparison (repetition statistics per condition)
// ---------------------------------------------------------------------------

inline constexpr std::string_view comparison_csv_header =
    "condition_label,repetitions,visibility_mean,visibility_std,sigma_v_mean,sigma_v_std,method";

struct ComparisonRow {
    std::string condition_label;
    std::uint64_t repetitions = 0;
    double visibility_mean = 0.0;
    double visibility_std = 0.0;
    double sigma_v_mean = 0.0;
    double sigma_v_std = 0.0;
    ExtremaMethod method = ExtremaMethod::pointwise;
};

inline std::string write_comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::string out(comparison_csv_header);
    out += '\n';
    for (const ComparisonRow& r : rows) {
        out += csv_row({r.condition_label, format_u64(r.repetitions),
                        format_double(r.visibility_mean), format_double(r.visibility_std),
                        format_double(r.sigma_v_mean), format_double(r.sigma_v_std),
                        to_string(r.method)});
    }
    return out;
}

inline std::vector<ComparisonRow> parse_comparison_csv(std::string_view text) {
    const std::vector<std::string> lines = split_lines(text);
    require_header(lines, comparison_csv_header);
    std::vector<ComparisonRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t line = i + 1;
        const auto cells = csv_data_row(lines[i], line, 7);
        ComparisonRow r;
        r.condition_label = cells[0];
        r.repetitions = parse_u64_cell(cells[1], line, 2);
        r.visibility_mean = parse_double_cell(cells[2], line, 3);
        r.visibility_std = parse_double_cell(cells[3], line, 4);
        r.sigma_v_mean = parse_double_cell(cells[4], line, 5);
        r.sigma_v_std = parse_double_cell(cells[5], line, 6);
        r.method = parse_method_token(cells[6], line, 7);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace pmfsim
