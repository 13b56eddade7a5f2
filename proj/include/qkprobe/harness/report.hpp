#pragma once

//! Rendered views of an evaluation report: a flat CSV grid, a Markdown
//! accuracy table, and per-setup SVG heatmaps of the calibration
//! rankings.  Every emitter is a pure function of the report content, so
//! repeated emission is byte-identical; the run timestamp deliberately
//! stays out of all three.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/harness/experiment.hpp"

namespace qkprobe::harness {

/// Flat grid, one row per (setup, decision source).  Baseline rows leave
/// the head columns empty.
inline std::string report_csv(const EvalReport& report) {
    std::string out = "setup,source,layer,head,orientation,accuracy,correct,total\n";
    for (const SetupResult& res : report.setups) {
        for (const EvalCell& cell : res.cells) {
            out += res.setup.label();
            if (cell.is_baseline) {
                out += ",baseline,,,";
            } else {
                out += ",qk," + std::to_string(cell.head.layer) + "," +
                       std::to_string(cell.head.head) + "," + probe::to_string(cell.orientation);
            }
            out += "," + fmt_double(cell.accuracy) + "," + std::to_string(cell.correct) + "," +
                   std::to_string(cell.total) + "\n";
        }
    }
    return out;
}

/// Accuracy table: decision sources as rows, setups as columns.  The best
/// cell of each column is bold (ties all bold) and probe cells beating
/// that column's baseline are underlined.
inline std::string report_markdown(const EvalReport& report) {
    std::string out = "# probe evaluation grid\n\n";
    out += "- model: " + (report.model_digest.empty() ? "-" : report.model_digest) + "\n";
    out += "- variant: " + runtime::to_string(report.variant) + "\n";
    out += "- head mode: " + report.head_mode + "\n";
    out += "- seed: " + std::to_string(report.seed) + "\n\n";

    out += "| decision source |";
    for (const SetupResult& res : report.setups) out += " " + res.setup.label() + " |";
    out += "\n|---|";
    for (size_t i = 0; i < report.setups.size(); ++i) out += "---|";
    out += "\n";

    std::vector<double> col_max(report.setups.size(), 0.0);
    std::vector<double> col_baseline(report.setups.size(), 0.0);
    for (size_t i = 0; i < report.setups.size(); ++i) {
        for (const EvalCell& cell : report.setups[i].cells) {
            col_max[i] = std::max(col_max[i], cell.accuracy);
            if (cell.is_baseline) col_baseline[i] = cell.accuracy;
        }
    }

    size_t rows = report.setups.empty() ? 0 : report.setups.front().cells.size();
    for (size_t r = 0; r < rows; ++r) {
        out += "| " + report.setups.front().cells[r].source + " |";
        for (size_t i = 0; i < report.setups.size(); ++i) {
            const EvalCell& cell = report.setups[i].cells[r];
            std::string text = fmt_double(cell.accuracy, 4);
            if (!cell.is_baseline && cell.accuracy > col_baseline[i])
                text = "<u>" + text + "</u>";
            if (cell.accuracy == col_max[i]) text = "**" + text + "**";
            out += " " + text + " |";
        }
        out += "\n";
    }
    return out;
}

namespace detail {

// Diverging fill centered on chance: 0.5 is white, perfect heads shade
// toward blue, anti-correlated heads toward red.
inline std::string heat_color(double accuracy) {
    double t = (std::min(1.0, std::max(0.0, accuracy)) - 0.5) * 2.0;
    int r, g, b;
    if (t >= 0) {
        r = 255 - static_cast<int>(std::lround(t * 205.0));
        g = 255 - static_cast<int>(std::lround(t * 140.0));
        b = 255;
    } else {
        r = 255;
        g = 255 - static_cast<int>(std::lround(-t * 140.0));
        b = 255 - static_cast<int>(std::lround(-t * 205.0));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return std::string(buf);
}

}  // namespace detail

/// Calibration accuracy of every head in one setup as a layers-by-heads
/// grid.  Each cell carries its accuracy both as text and as a tooltip.
inline std::string heatmap_svg(const SetupResult& res) {
    const int n_layers = res.calibration.ranking.empty()
                             ? 0
                             : 1 + std::max_element(res.calibration.ranking.begin(),
                                                    res.calibration.ranking.end(),
                                                    [](const auto& a, const auto& b) {
                                                        return a.head.layer < b.head.layer;
                                                    })
                                       ->head.layer;
    const int n_heads = res.calibration.ranking.empty()
                            ? 0
                            : 1 + std::max_element(res.calibration.ranking.begin(),
                                                   res.calibration.ranking.end(),
                                                   [](const auto& a, const auto& b) {
                                                       return a.head.head < b.head.head;
                                                   })
                                      ->head.head;
    const int cell_w = 56, cell_h = 32, left = 44, top = 48;
    const int width = left + n_heads * cell_w + 8;
    const int height = top + n_layers * cell_h + 8;

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(width) + "\" height=\"" + std::to_string(height) +
                      "\" font-family=\"monospace\" font-size=\"11\">\n";
    svg += "<text x=\"" + std::to_string(left) +
           "\" y=\"16\" font-size=\"13\">calibration accuracy: " + res.setup.label() +
           "</text>\n";
    for (int h = 0; h < n_heads; ++h)
        svg += "<text x=\"" + std::to_string(left + h * cell_w + cell_w / 2) + "\" y=\"" +
               std::to_string(top - 8) + "\" text-anchor=\"middle\">H" + std::to_string(h) +
               "</text>\n";
    for (int l = 0; l < n_layers; ++l)
        svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" +
               std::to_string(top + l * cell_h + cell_h / 2 + 4) +
               "\" text-anchor=\"end\">L" + std::to_string(l) + "</text>\n";

    std::map<HeadId, double> acc;
    for (const probe::HeadResult& r : res.calibration.ranking) acc[r.head] = r.accuracy;
    for (int l = 0; l < n_layers; ++l) {
        for (int h = 0; h < n_heads; ++h) {
            auto it = acc.find(HeadId{l, h});
            if (it == acc.end()) continue;
            double a = it->second;
            int x = left + h * cell_w, y = top + l * cell_h;
            std::string fg = std::abs(a - 0.5) > 0.3 ? "#ffffff" : "#1a1a1a";
            svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
                   "\" width=\"" + std::to_string(cell_w) + "\" height=\"" +
                   std::to_string(cell_h) + "\" fill=\"" + detail::heat_color(a) +
                   "\" stroke=\"#ffffff\"><title>" + runtime::to_string(HeadId{l, h}) + " " +
                   fmt_double(a, 4) + "</title></rect>\n";
            svg += "<text x=\"" + std::to_string(x + cell_w / 2) + "\" y=\"" +
                   std::to_string(y + cell_h / 2 + 4) + "\" text-anchor=\"middle\" fill=\"" + fg +
                   "\">" + fmt_double(a, 2) + "</text>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

/// Writes the requested renderings under out_dir and returns the paths.
/// Known formats: csv, markdown, svg-heatmap.
inline std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                                      const std::vector<std::string>& formats,
                                                      const std::filesystem::path& out_dir) {
    bool want_csv = false, want_md = false, want_svg = false;
    for (const std::string& f : formats) {
        if (f == "csv")
            want_csv = true;
        else if (f == "markdown")
            want_md = true;
        else if (f == "svg-heatmap")
            want_svg = true;
        else
            throw UnsupportedFormat("unknown report format: " + f +
                                    " (want csv, markdown, or svg-heatmap)");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    if (want_csv) {
        written.push_back(out_dir / "report.csv");
        write_text_file(written.back(), report_csv(report));
    }
    if (want_md) {
        written.push_back(out_dir / "report.md");
        write_text_file(written.back(), report_markdown(report));
    }
    if (want_svg) {
        for (size_t i = 0; i < report.setups.size(); ++i) {
            written.push_back(out_dir / ("heatmap-" + detail::setup_dir_name(i) + ".svg"));
            write_text_file(written.back(), heatmap_svg(report.setups[i]));
        }
    }
    return written;
}

}  // namespace qkprobe::harness
