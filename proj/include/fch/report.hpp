#pragma once

#include <string>
#include <vector>

#include "fch/experiment.hpp"

namespace fch::report {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y)
};

// Self-contained static SVG: axes, ticks, legend, one polyline per series.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

struct ReportFiles {
    std::vector<std::string> written;         // paths of emitted report files
    std::vector<std::string> missing_inputs;  // manifest entries absent on disk
};

// Read-only consumer of a sealed run directory: one ASR-vs-epoch plot per
// curve file, a per-method FN/SF summary table (markdown), and a text summary.
// Never recomputes attacks. Reports zero-sample runs rather than failing.
ReportFiles render_report(const experiment::RunManifest& manifest, const std::string& run_dir);

// Convenience: load <run_dir>/manifest.json and render next to it.
ReportFiles render_report(const std::string& manifest_path);

}  // namespace fch::report
