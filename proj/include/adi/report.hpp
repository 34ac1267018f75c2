#pragma once

#include "adi/bench.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adi {

// Parses rows written by metrics_csv_row (header line optional).
std::vector<SweepRow> parse_metrics_csv(const std::string& text);

// Self-contained SVG charts, no external renderer.
struct ChartSeries {
    std::string name;
    std::vector<double> x, y;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series);
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<ChartSeries>& series);  // series share the label axis

// Renders the three standard comparison charts from a sweep CSV into `out_dir`:
// beta_sweep.svg (line), strategy_compare.svg (bars), merge_compare.svg (bars).
// Charts whose rows are absent are skipped; returns the files written.
std::vector<std::filesystem::path> render_report(const std::filesystem::path& csv_path,
                                                 const std::filesystem::path& out_dir);

}  // namespace adi
