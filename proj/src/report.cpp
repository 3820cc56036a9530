#include "fch/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fch/errors.hpp"
#include "fch/util.hpp"

namespace fs = std::filesystem;

namespace fch::report {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#e377c2"};
constexpr size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (const char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
    constexpr double width = 720, height = 440;
    constexpr double left = 70, right = 170, top = 50, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double x_min = 0, x_max = 1, y_max = 1;
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!any) {
                x_min = x_max = x;
                any = true;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_max = std::max(y_max, y);
        }
    if (x_max == x_min) x_max = x_min + 1;

    const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    const auto sy = [&](double y) { return top + (1.0 - y / y_max) * plot_h; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
                      "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
                      fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(width / 2) + "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\" font-weight=\"bold\">" +
           escape_xml(title) + "</text>\n";

    // frame
    svg += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(plot_w) +
           "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#333\"/>\n";

    // ticks: 5 on each axis
    for (int i = 0; i <= 4; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 4.0;
        const double fy = y_max * i / 4.0;
        svg += "<line x1=\"" + fmt(sx(fx)) + "\" y1=\"" + fmt(top + plot_h) + "\" x2=\"" +
               fmt(sx(fx)) + "\" y2=\"" + fmt(top + plot_h + 5) + "\" stroke=\"#333\"/>\n";
        svg += "<text x=\"" + fmt(sx(fx)) + "\" y=\"" + fmt(top + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt(fx) + "</text>\n";
        svg += "<line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(sy(fy)) + "\" x2=\"" +
               fmt(left) + "\" y2=\"" + fmt(sy(fy)) + "\" stroke=\"#333\"/>\n";
        svg += "<text x=\"" + fmt(left - 9) + "\" y=\"" + fmt(sy(fy) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fy) +
               "</text>\n";
        if (i > 0)
            svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(sy(fy)) + "\" x2=\"" +
                   fmt(left + plot_w) + "\" y2=\"" + fmt(sy(fy)) +
                   "\" stroke=\"#ddd\" stroke-dasharray=\"3,3\"/>\n";
    }

    svg += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(height - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape_xml(x_label) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + fmt(top + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 20 " +
           fmt(top + plot_h / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        std::string pts;
        for (const auto& [x, y] : series[s].points)
            pts += fmt(sx(x)) + "," + fmt(sy(y)) + " ";
        svg += "<polyline points=\"" + pts +
               "\" fill=\"none\" stroke-width=\"2\" stroke=\"" + color + "\"/>\n";
        for (const auto& [x, y] : series[s].points)
            svg += "<circle cx=\"" + fmt(sx(x)) + "\" cy=\"" + fmt(sy(y)) +
                   "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
        const double ly = top + 16 + 18 * static_cast<double>(s);
        svg += "<line x1=\"" + fmt(left + plot_w + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(left + plot_w + 32) + "\" y2=\"" + fmt(ly) + "\" stroke-width=\"2\" stroke=\"" +
               color + "\"/>\n";
        svg += "<text x=\"" + fmt(left + plot_w + 38) + "\" y=\"" + fmt(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(series[s].label) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

ReportFiles render_report(const experiment::RunManifest& manifest, const std::string& run_dir) {
    ReportFiles out;
    const fs::path base(run_dir);
    const fs::path report_dir = base / "report";
    fs::create_directories(report_dir);

    struct CurveSummary {
        std::string label;
        double fn = 0, sf = 0;
        size_t n = 0, epochs = 0;
    };
    std::vector<CurveSummary> rows;

    for (const auto& rel : manifest.curve_files) {
        const fs::path path = base / rel;
        if (!fs::exists(path)) {
            out.missing_inputs.push_back(rel);
            continue;
        }
        const auto curve = experiment::read_curve_csv(path.string());
        Series fn_series{"FN ASR", {}};
        Series sf_series{"SF ASR", {}};
        for (const auto& pt : curve.points) {
            fn_series.points.push_back({static_cast<double>(pt.epoch), pt.fn_asr});
            sf_series.points.push_back({static_cast<double>(pt.epoch), pt.sf_asr});
        }
        const fs::path svg_path = report_dir / (path.stem().string() + ".svg");
        util::write_file(svg_path.string(),
                         svg_line_chart(curve.label, "epoch", "attack success rate",
                                        {fn_series, sf_series}));
        out.written.push_back(svg_path.string());

        CurveSummary row;
        row.label = curve.label;
        if (!curve.points.empty()) {
            row.fn = curve.points.back().fn_asr;
            row.sf = curve.points.back().sf_asr;
            row.n = curve.points.back().n;
            row.epochs = curve.points.back().epoch;
        }
        rows.push_back(row);
    }
    for (const auto& rel : manifest.record_files)
        if (!fs::exists(base / rel)) out.missing_inputs.push_back(rel);

    size_t done = 0, failed = 0, resumed = 0;
    for (const auto& entry : manifest.samples) {
        if (entry.status == "done") ++done;
        if (entry.status == "failed") ++failed;
        if (entry.status == "resumed") ++resumed;
    }

    std::string md = "# Run report\n\n";
    md += "- version: " + manifest.version_stamp + "\n";
    md += "- created: " + manifest.created_at + "\n";
    md += "- samples: " + std::to_string(manifest.samples.size()) + " (done " +
          std::to_string(done) + ", resumed " + std::to_string(resumed) + ", failed " +
          std::to_string(failed) + ")\n\n";
    if (manifest.samples.empty()) md += "No samples were produced by this run.\n\n";
    if (!rows.empty()) {
        md += "| method | FN ASR | SF ASR | n | final epoch |\n";
        md += "|---|---|---|---|---|\n";
        char line[160];
        for (const auto& row : rows) {
            std::snprintf(line, sizeof line, "| %s | %.3f | %.3f | %zu | %zu |\n",
                          row.label.c_str(), row.fn, row.sf, row.n, row.epochs);
            md += line;
        }
        md += "\n";
    }
    if (!out.missing_inputs.empty()) {
        md += "## Missing inputs\n\n";
        for (const auto& rel : out.missing_inputs) md += "- " + rel + "\n";
        md += "\n";
    }
    const fs::path md_path = report_dir / "summary.md";
    util::write_file(md_path.string(), md);
    out.written.push_back(md_path.string());

    std::string txt = "run report (" + manifest.version_stamp + ")\n";
    txt += "samples: " + std::to_string(manifest.samples.size()) + ", failed: " +
           std::to_string(failed) + "\n";
    for (const auto& row : rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%-28s FN %.3f  SF %.3f  (n=%zu, epoch %zu)\n",
                      row.label.c_str(), row.fn, row.sf, row.n, row.epochs);
        txt += line;
    }
    if (rows.empty()) txt += "no curves emitted\n";
    const fs::path txt_path = report_dir / "summary.txt";
    util::write_file(txt_path.string(), txt);
    out.written.push_back(txt_path.string());
    return out;
}

ReportFiles render_report(const std::string& manifest_path) {
    const auto manifest = experiment::RunManifest::load(manifest_path);
    return render_report(manifest, fs::path(manifest_path).parent_path().string());
}

}  // namespace fch::report
