#include "adi/report.hpp"

#include "adi/io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace adi {

namespace fs = std::filesystem;

std::vector<SweepRow> parse_metrics_csv(const std::string& text) {
    std::vector<SweepRow> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line.rfind("config_hash", 0) == 0) continue;
        std::istringstream ls(line);
        std::string f[11];
        for (int i = 0; i < 11; ++i)
            if (!std::getline(ls, f[i], ',')) throw std::runtime_error("metrics csv: short row '" + line + "'");
        SweepRow r;
        r.config_hash = f[0];
        r.strategy = f[1];
        r.beta = std::stod(f[2]);
        r.merge = f[3];
        r.metrics.action_acc = std::stod(f[4]);
        r.metrics.subject_acc = std::stod(f[5]);
        r.metrics.total_acc = std::stod(f[6]);
        r.metrics.context_leak = std::stod(f[7]);
        r.metrics.overlap_rate = std::stod(f[8]);
        r.metrics.ci_low = std::stod(f[9]);
        r.metrics.ci_high = std::stod(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kMarginL = 64, kMarginR = 24, kMarginT = 48, kMarginB = 56;
const char* kColors[] = {"#2266cc", "#cc4422", "#22aa66", "#9944bb", "#bb8800", "#557788"};

std::string fnum(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(std::abs(v) < 10 ? 2 : 1);
    os << v;
    return os.str();
}

void svg_open(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
       << kW << " " << kH << "\">\n";
    os << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << title << "</text>\n";
}

void svg_axes(std::ostringstream& os) {
    os << "<line x1=\"" << kMarginL << "\" y1=\"" << kH - kMarginB << "\" x2=\"" << kW - kMarginR << "\" y2=\""
       << kH - kMarginB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL << "\" y2=\""
       << kH - kMarginB << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        const double y = kH - kMarginB - v * (kH - kMarginT - kMarginB);
        os << "<text x=\"" << kMarginL - 8 << "\" y=\"" << y + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fnum(v) << "</text>\n";
        os << "<line x1=\"" << kMarginL - 4 << "\" y1=\"" << y << "\" x2=\"" << kMarginL << "\" y2=\"" << y
           << "\" stroke=\"black\"/>\n";
    }
}

void svg_legend(std::ostringstream& os, const std::vector<ChartSeries>& series) {
    int x = kMarginL + 10;
    for (size_t s = 0; s < series.size(); ++s) {
        os << "<rect x=\"" << x << "\" y=\"" << kMarginT - 14 << "\" width=\"12\" height=\"12\" fill=\""
           << kColors[s % 6] << "\"/>\n";
        os << "<text x=\"" << x + 16 << "\" y=\"" << kMarginT - 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
           << series[s].name << "</text>\n";
        x += 18 + static_cast<int>(series[s].name.size()) * 8 + 18;
    }
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series) {
    double xmin = 1e30, xmax = -1e30;
    for (const auto& s : series)
        for (double x : s.x) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    if (xmin >= xmax) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    std::ostringstream os;
    svg_open(os, title);
    svg_axes(os);
    svg_legend(os, series);
    auto px = [&](double x) { return kMarginL + (x - xmin) / (xmax - xmin) * (kW - kMarginL - kMarginR); };
    auto py = [&](double y) { return kH - kMarginB - y * (kH - kMarginT - kMarginB); };
    for (size_t s = 0; s < series.size(); ++s) {
        os << "<polyline fill=\"none\" stroke=\"" << kColors[s % 6] << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < series[s].x.size(); ++i)
            os << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
        os << "\"/>\n";
        for (size_t i = 0; i < series[s].x.size(); ++i)
            os << "<circle cx=\"" << px(series[s].x[i]) << "\" cy=\"" << py(series[s].y[i]) << "\" r=\"3\" fill=\""
               << kColors[s % 6] << "\"/>\n";
    }
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i)
            os << "<text x=\"" << px(s.x[i]) << "\" y=\"" << kH - kMarginB + 16
               << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fnum(s.x[i])
               << "</text>\n";
    os << "<text x=\"" << (kW / 2) << "\" y=\"" << kH - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 16 " << kH / 2
       << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<ChartSeries>& series) {
    std::ostringstream os;
    svg_open(os, title);
    svg_axes(os);
    svg_legend(os, series);
    const int n = static_cast<int>(labels.size());
    const double span = static_cast<double>(kW - kMarginL - kMarginR) / std::max(1, n);
    const double bw = span * 0.7 / std::max<size_t>(1, series.size());
    auto py = [&](double y) { return kH - kMarginB - y * (kH - kMarginT - kMarginB); };
    for (int i = 0; i < n; ++i) {
        const double cx = kMarginL + span * (i + 0.5);
        for (size_t s = 0; s < series.size(); ++s) {
            const double v = series[s].y[static_cast<size_t>(i)];
            const double x0 = cx - 0.5 * bw * static_cast<double>(series.size()) + bw * static_cast<double>(s);
            os << "<rect x=\"" << x0 << "\" y=\"" << py(v) << "\" width=\"" << bw << "\" height=\""
               << (kH - kMarginB - py(v)) << "\" fill=\"" << kColors[s % 6] << "\"/>\n";
        }
        os << "<text x=\"" << cx << "\" y=\"" << kH - kMarginB + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << labels[static_cast<size_t>(i)]
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<fs::path> render_report(const fs::path& csv_path, const fs::path& out_dir) {
    const auto rows = parse_metrics_csv(read_file(csv_path));
    fs::create_directories(out_dir);
    std::vector<fs::path> written;

    // beta sweep: adi rows with intersection merge, by beta
    {
        std::map<double, const SweepRow*> by_beta;
        for (const auto& r : rows)
            if (r.strategy == "adi" && r.merge == "intersection") by_beta[r.beta] = &r;
        if (by_beta.size() >= 2) {
            ChartSeries total{"total_acc", {}, {}}, action{"action_acc", {}, {}}, subject{"subject_acc", {}, {}};
            for (const auto& [b, r] : by_beta) {
                total.x.push_back(b);
                total.y.push_back(r->metrics.total_acc);
                action.x.push_back(b);
                action.y.push_back(r->metrics.action_acc);
                subject.x.push_back(b);
                subject.y.push_back(r->metrics.subject_acc);
            }
            fs::path p = out_dir / "beta_sweep.svg";
            atomic_write(p, svg_line_chart("masking ratio sweep", "beta", "accuracy", {total, action, subject}));
            written.push_back(p);
        }
    }
    // strategy comparison at the default beta (pick the most common beta among strategy rows)
    {
        std::vector<const SweepRow*> strat;
        for (const auto& r : rows)
            if (r.merge == "intersection") strat.push_back(&r);
        std::map<std::string, const SweepRow*> uniq;
        for (const auto* r : strat) uniq[r->strategy] = r;
        if (uniq.size() >= 2) {
            std::vector<std::string> labels;
            ChartSeries action{"action_acc", {}, {}}, subject{"subject_acc", {}, {}}, total{"total_acc", {}, {}};
            for (const auto& [name, r] : uniq) {
                labels.push_back(name);
                action.y.push_back(r->metrics.action_acc);
                subject.y.push_back(r->metrics.subject_acc);
                total.y.push_back(r->metrics.total_acc);
            }
            fs::path p = out_dir / "strategy_compare.svg";
            atomic_write(p, svg_bar_chart("masking strategy comparison", labels, {action, subject, total}));
            written.push_back(p);
        }
    }
    // merge comparison: adi rows by merge mode
    {
        std::map<std::string, const SweepRow*> by_merge;
        for (const auto& r : rows)
            if (r.strategy == "adi") by_merge[r.merge] = &r;
        if (by_merge.size() >= 2) {
            std::vector<std::string> labels;
            ChartSeries action{"action_acc", {}, {}}, subject{"subject_acc", {}, {}}, total{"total_acc", {}, {}};
            for (const auto& [name, r] : by_merge) {
                labels.push_back(name);
                action.y.push_back(r->metrics.action_acc);
                subject.y.push_back(r->metrics.subject_acc);
                total.y.push_back(r->metrics.total_acc);
            }
            fs::path p = out_dir / "merge_compare.svg";
            atomic_write(p, svg_bar_chart("mask merge comparison", labels, {action, subject, total}));
            written.push_back(p);
        }
    }
    return written;
}

}  // namespace adi
