#include "resflat/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace resflat {
namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 840.0;
constexpr double kTop = 46.0;
constexpr double kBottom = 460.0;

std::string fmt(double v, const char* pattern = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return std::string(buf);
}

struct Series {
    std::string label;
    std::string color;
    bool dashed = false;
    std::vector<std::pair<double, double>> points;  // (log2 x, loss)
};

double axis_value(const ExperimentRecord& rec, PlotAxis axis) {
    switch (axis) {
        case PlotAxis::Depth: return static_cast<double>(rec.spec.depth);
        case PlotAxis::Filters: return static_cast<double>(rec.spec.filters);
        case PlotAxis::Ratio:
            return static_cast<double>(rec.spec.depth) / static_cast<double>(rec.spec.filters);
    }
    throw std::invalid_argument("unknown plot axis");
}

// Sort before summing so file order never changes the average.
double stable_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::string tick_label(double raw) {
    if (raw == std::floor(raw) && std::fabs(raw) < 1e6) {
        return std::to_string(static_cast<long long>(raw));
    }
    return fmt(raw, "%.3g");
}

}  // namespace

const char* plot_axis_name(PlotAxis axis) {
    switch (axis) {
        case PlotAxis::Depth: return "depth";
        case PlotAxis::Filters: return "filters";
        case PlotAxis::Ratio: return "ratio";
    }
    throw std::invalid_argument("unknown plot axis");
}

PlotAxis plot_axis_from_name(const std::string& name) {
    if (name == "depth") return PlotAxis::Depth;
    if (name == "filters") return PlotAxis::Filters;
    if (name == "ratio") return PlotAxis::Ratio;
    throw std::invalid_argument("unknown plot axis: " + name);
}

std::string emit_plot(const std::vector<ExperimentRecord>& records, PlotAxis axis) {
    if (records.empty()) throw std::runtime_error("plot: no records");

    // (variant, is_val, raw x) -> final losses
    std::map<std::tuple<int, int, double>, std::vector<double>> buckets;
    for (const auto& rec : records) {
        if (rec.metrics.empty()) throw std::runtime_error("plot: record with no epoch metrics");
        const double x = axis_value(rec, axis);
        const int v = rec.spec.variant == Variant::Sequential ? 0 : 1;
        buckets[{v, 0, x}].push_back(rec.metrics.back().train_loss);
        buckets[{v, 1, x}].push_back(rec.metrics.back().val_loss);
    }

    const char* kColors[2] = {"#c62828", "#1a56c4"};
    const char* kVariants[2] = {"sequential", "parallel"};
    std::vector<Series> series;
    for (int v = 0; v < 2; ++v) {
        for (int split = 0; split < 2; ++split) {
            Series s;
            s.label = std::string(kVariants[v]) + (split == 0 ? " train" : " val");
            s.color = kColors[v];
            s.dashed = split == 1;
            for (const auto& [key, vals] : buckets) {
                if (std::get<0>(key) != v || std::get<1>(key) != split) continue;
                s.points.emplace_back(std::log2(std::get<2>(key)), stable_mean(vals));
            }
            std::sort(s.points.begin(), s.points.end());
            if (!s.points.empty()) series.push_back(std::move(s));
        }
    }

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    std::set<double> raw_xs;
    for (const auto& [key, vals] : buckets) raw_xs.insert(std::get<2>(key));
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max - x_min < 1e-12) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (y_max - y_min < 1e-12) {
        const double pad = std::max(0.1, std::fabs(y_max) * 0.1);
        y_min -= pad;
        y_max += pad;
    } else {
        const double pad = (y_max - y_min) * 0.06;
        y_min -= pad;
        y_max += pad;
    }

    auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft); };
    auto sy = [&](double y) { return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">final loss vs "
        << plot_axis_name(axis) << "</text>\n";

    // frame
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << (kRight - kLeft)
        << "\" height=\"" << (kBottom - kTop)
        << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

    // x ticks at data positions (thin to at most 12)
    std::vector<double> xs(raw_xs.begin(), raw_xs.end());
    std::vector<double> shown;
    if (xs.size() <= 12) {
        shown = xs;
    } else {
        for (std::size_t i = 0; i < 12; ++i) {
            shown.push_back(xs[i * (xs.size() - 1) / 11]);
        }
    }
    for (double raw : shown) {
        const double px = sx(std::log2(raw));
        svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << kBottom << "\" x2=\"" << fmt(px)
            << "\" y2=\"" << (kBottom + 6) << "\" stroke=\"#444444\"/>\n";
        svg << "<text x=\"" << fmt(px) << "\" y=\"" << (kBottom + 22)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << tick_label(raw) << "</text>\n";
    }
    svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << (kBottom + 44)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << plot_axis_name(axis) << " (log2 axis)</text>\n";

    for (int i = 0; i < 5; ++i) {
        const double y = y_min + (y_max - y_min) * i / 4.0;
        const double py = sy(y);
        svg << "<line x1=\"" << (kLeft - 6) << "\" y1=\"" << fmt(py) << "\" x2=\"" << kLeft
            << "\" y2=\"" << fmt(py) << "\" stroke=\"#444444\"/>\n";
        svg << "<text x=\"" << (kLeft - 10) << "\" y=\"" << fmt(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt(y, "%.4g") << "</text>\n";
    }
    svg << "<text x=\"18\" y=\"" << (kTop + kBottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << (kTop + kBottom) / 2 << ")\">cross-entropy loss</text>\n";

    for (const auto& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (s.dashed) svg << " stroke-dasharray=\"7,5\"";
        svg << " points=\"";
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            if (i) svg << ' ';
            svg << fmt(sx(s.points[i].first)) << ',' << fmt(sy(s.points[i].second));
        }
        svg << "\"/>\n";
        for (const auto& [x, y] : s.points) {
            svg << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
                << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
        }
    }

    double ly = kTop + 14;
    for (const auto& s : series) {
        svg << "<line x1=\"" << (kRight - 180) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
            << (kRight - 150) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"";
        if (s.dashed) svg << " stroke-dasharray=\"7,5\"";
        svg << "/>\n";
        svg << "<text x=\"" << (kRight - 144) << "\" y=\"" << fmt(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        ly += 18;
    }

    svg << "</svg>\n";
    return svg.str();
}

void write_plot(const std::string& path, const std::vector<ExperimentRecord>& records,
                PlotAxis axis) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open svg for write: " + path);
    out << emit_plot(records, axis);
    if (!out) throw std::runtime_error("svg write failed: " + path);
}

}  // namespace resflat
