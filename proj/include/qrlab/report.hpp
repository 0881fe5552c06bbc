#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qrlab/geometry.hpp"

namespace qrlab {

// Version of the JSON report layout.  Bump when fields move or change
// meaning; additive fields do not require a bump.
inline constexpr int kReportSchemaVersion = 1;

// One CSV artifact.  `schema` names the column contract (documented in the
// README); the header line is always written.
struct CsvFile {
    std::string name;
    std::string schema;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct SvgFile {
    std::string name;
    std::string content;
};

// Shortest decimal that round-trips the double (to_chars).  Infinities and
// NaN map to "inf"/"-inf"/"nan".
std::string format_number(double value);

std::string csv_text(const CsvFile& file);

// Write-to-temporary-then-rename so readers never observe partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
// JSON is serialized with sorted keys and a trailing newline so identical
// reports are byte-identical.
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json json_point(const Vec& v);
nlohmann::json json_value(const ExtendedPoint& p); // coords or "infinity"

// ---------------------------------------------------------------------------
// Minimal self-contained SVG plots (no external tooling).
// ---------------------------------------------------------------------------

// Row-major scalar field on a regular grid; values.size() == nx*ny with the
// first axis fastest.  NaNs render as blanks.
std::string svg_heatmap(const std::string& title, int nx, int ny,
                        const std::vector<double>& values, double xmin, double xmax,
                        double ymin, double ymax);

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Line plot; with `loglog` set both axes are log10 and non-positive points
// are dropped.
std::string svg_curve(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<PlotSeries>& series,
                      bool loglog);

// Scatter of raw points with fixed axis limits.
std::string svg_scatter(const std::string& title, const std::string& xlabel,
                        const std::string& ylabel,
                        const std::vector<std::pair<double, double>>& points,
                        double xmin, double xmax, double ymin, double ymax);

} // namespace qrlab
