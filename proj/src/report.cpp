#include "qrlab/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qrlab {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

namespace {

void check_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") != std::string::npos)
        throw std::logic_error("CSV cell contains a delimiter: " + cell);
}

void append_row(std::string& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        check_cell(row[i]);
        if (i) out.push_back(',');
        out += row[i];
    }
    out.push_back('\n');
}

std::string escape_xml(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string csv_text(const CsvFile& file) {
    if (file.header.empty())
        throw std::logic_error("CSV file " + file.name + " lacks a header");
    std::string out;
    append_row(out, file.header);
    for (const auto& row : file.rows) {
        if (row.size() != file.header.size())
            throw std::logic_error("CSV row width mismatch in " + file.name);
        append_row(out, row);
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out.good())
            throw std::runtime_error("failed to write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc) {
    write_file_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json json_point(const Vec& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.dim(); ++i) out.push_back(v[i]);
    return out;
}

nlohmann::json json_value(const ExtendedPoint& p) {
    if (p.is_infinite()) return "infinity";
    return json_point(p.finite());
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 540;
constexpr int kLeft = 70;
constexpr int kRight = 30;
constexpr int kTop = 40;
constexpr int kBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

struct Frame {
    double xmin, xmax, ymin, ymax;

    double px(double x) const {
        double t = (x - xmin) / (xmax - xmin);
        return kLeft + t * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        double t = (y - ymin) / (ymax - ymin);
        return kHeight - kBottom - t * (kHeight - kTop - kBottom);
    }
};

void pad_degenerate(double& lo, double& hi) {
    if (!(hi > lo)) {
        double pad = std::max(1.0, std::abs(lo)) * 0.5;
        lo -= pad;
        hi += pad;
    }
}

std::string fmt_tick(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

void open_svg(std::ostringstream& svg, const std::string& title) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
        << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-family=\"sans-serif\""
        << " font-size=\"15\" text-anchor=\"middle\">" << escape_xml(title)
        << "</text>\n";
}

void draw_axes(std::ostringstream& svg, const Frame& f, const std::string& xlabel,
               const std::string& ylabel) {
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
        << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    auto label = [&](double x, double y, const std::string& text,
                     const std::string& anchor) {
        svg << "<text x=\"" << x << "\" y=\"" << y
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\""
            << anchor << "\">" << escape_xml(text) << "</text>\n";
    };
    label(kLeft, kHeight - kBottom + 16, fmt_tick(f.xmin), "middle");
    label(kWidth - kRight, kHeight - kBottom + 16, fmt_tick(f.xmax), "middle");
    label(kLeft - 6, kHeight - kBottom + 4, fmt_tick(f.ymin), "end");
    label(kLeft - 6, kTop + 10, fmt_tick(f.ymax), "end");
    label((kLeft + kWidth - kRight) / 2.0, kHeight - kBottom + 36, xlabel, "middle");
    svg << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2.0
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 18 " << (kTop + kHeight - kBottom) / 2.0
        << ")\">" << escape_xml(ylabel) << "</text>\n";
}

// Blue -> yellow -> red ramp on [0,1].
std::string heat_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    double r, g, b;
    if (t < 0.5) {
        double u = t * 2.0;
        r = 0.13 + u * (0.95 - 0.13);
        g = 0.25 + u * (0.85 - 0.25);
        b = 0.70 - u * 0.55;
    } else {
        double u = (t - 0.5) * 2.0;
        r = 0.95;
        g = 0.85 - u * 0.70;
        b = 0.15 - u * 0.05;
    }
    std::array<char, 8> buf{};
    std::snprintf(buf.data(), buf.size(), "#%02x%02x%02x", int(r * 255 + 0.5),
                  int(g * 255 + 0.5), int(b * 255 + 0.5));
    return std::string(buf.data());
}

} // namespace

std::string svg_heatmap(const std::string& title, int nx, int ny,
                        const std::vector<double>& values, double xmin, double xmax,
                        double ymin, double ymax) {
    if (nx <= 0 || ny <= 0 ||
        values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
        throw std::logic_error("heatmap dimensions do not match value count");
    double vmin = INFINITY, vmax = -INFINITY;
    for (double v : values)
        if (std::isfinite(v)) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    if (!(vmax > vmin)) {
        vmin = std::isfinite(vmin) ? vmin - 0.5 : 0.0;
        vmax = vmin + 1.0;
    }

    Frame f{xmin, xmax, ymin, ymax};
    pad_degenerate(f.xmin, f.xmax);
    pad_degenerate(f.ymin, f.ymax);
    std::ostringstream svg;
    open_svg(svg, title);
    double cw = (kWidth - kLeft - kRight) / static_cast<double>(nx);
    double ch = (kHeight - kTop - kBottom) / static_cast<double>(ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double v = values[static_cast<std::size_t>(j) * nx + i];
            std::string color =
                std::isfinite(v) ? heat_color((v - vmin) / (vmax - vmin)) : "#dddddd";
            double x = kLeft + i * cw;
            double y = kHeight - kBottom - (j + 1) * ch;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw + 0.5
                << "\" height=\"" << ch + 0.5 << "\" fill=\"" << color << "\"/>\n";
        }
    }
    draw_axes(svg, f, "x1", "x2");
    svg << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop - 6
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << "range [" << fmt_tick(vmin) << ", " << fmt_tick(vmax) << "]</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string svg_curve(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<PlotSeries>& series,
                      bool loglog) {
    std::vector<PlotSeries> drawn;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const PlotSeries& s : series) {
        PlotSeries t;
        t.label = s.label;
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (loglog) {
                if (!(x > 0.0) || !(y > 0.0)) continue;
                x = std::log10(x);
                y = std::log10(y);
            }
            t.points.emplace_back(x, y);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        drawn.push_back(std::move(t));
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    Frame f{xmin, xmax, ymin, ymax};
    pad_degenerate(f.xmin, f.xmax);
    pad_degenerate(f.ymin, f.ymax);

    std::ostringstream svg;
    open_svg(svg, title);
    int color = 0;
    double legend_y = kTop + 14;
    for (const PlotSeries& s : drawn) {
        const char* stroke = kPalette[color % 6];
        ++color;
        if (s.points.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << stroke
                << "\" stroke-width=\"1.5\" points=\"";
            for (auto [x, y] : s.points) svg << f.px(x) << ',' << f.py(y) << ' ';
            svg << "\"/>\n";
        }
        for (auto [x, y] : s.points)
            svg << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y)
                << "\" r=\"2.2\" fill=\"" << stroke << "\"/>\n";
        if (!s.label.empty()) {
            svg << "<text x=\"" << kWidth - kRight - 8 << "\" y=\"" << legend_y
                << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\""
                << " fill=\"" << stroke << "\">" << escape_xml(s.label) << "</text>\n";
            legend_y += 14;
        }
    }
    draw_axes(svg, f, loglog ? "log10 " + xlabel : xlabel,
              loglog ? "log10 " + ylabel : ylabel);
    svg << "</svg>\n";
    return svg.str();
}

std::string svg_scatter(const std::string& title, const std::string& xlabel,
                        const std::string& ylabel,
                        const std::vector<std::pair<double, double>>& points,
                        double xmin, double xmax, double ymin, double ymax) {
    Frame f{xmin, xmax, ymin, ymax};
    pad_degenerate(f.xmin, f.xmax);
    pad_degenerate(f.ymin, f.ymax);
    std::ostringstream svg;
    open_svg(svg, title);
    for (auto [x, y] : points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        svg << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y)
            << "\" r=\"2.0\" fill=\"" << kPalette[0] << "\" fill-opacity=\"0.7\"/>\n";
    }
    draw_axes(svg, f, xlabel, ylabel);
    svg << "</svg>\n";
    return svg.str();
}

} // namespace qrlab
