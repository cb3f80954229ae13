#include "aesurv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace aesurv {

namespace {

constexpr const char* kPalette[] = {"#1f6fb4", "#c93c3c", "#3c9c50", "#8a5cb4",
                                    "#d98426", "#5c6470"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
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

/// Largest "nice" step (1/2/5 times a power of ten) giving <= 6 intervals.
double nice_step(double range) {
    if (!(range > 0.0)) return 1.0;
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

struct Frame {
    double width = 800.0;
    double height = 500.0;
    double left = 70.0;
    double right = 30.0;
    double top = 46.0;
    double bottom = 58.0;

    double plot_width() const { return width - left - right; }
    double plot_height() const { return height - top - bottom; }
};

void open_svg(std::string& svg, const Frame& f, const std::string& title) {
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.width) + "\" height=\"" +
           num(f.height) + "\" viewBox=\"0 0 " + num(f.width) + " " + num(f.height) + "\">\n";
    svg += "<rect width=\"" + num(f.width) + "\" height=\"" + num(f.height) +
           "\" fill=\"#ffffff\"/>\n";
    if (!title.empty()) {
        svg += "<text x=\"" + num(f.width / 2.0) +
               "\" y=\"24.00\" font-family=\"sans-serif\" font-size=\"16\" "
               "text-anchor=\"middle\">" +
               escape_xml(title) + "</text>\n";
    }
}

void draw_frame_box(std::string& svg, const Frame& f) {
    svg += "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" +
           num(f.plot_width()) + "\" height=\"" + num(f.plot_height()) +
           "\" fill=\"none\" stroke=\"#000000\"/>\n";
}

} // namespace

std::string svg_curves(const std::vector<CurveSeries>& series, const CurvePlotOptions& options) {
    if (series.empty()) fail(ErrorCode::empty_table, "no curves to plot");

    double x_max = options.x_max;
    double y_max = options.y_max;
    for (const CurveSeries& s : series) {
        x_max = std::max(x_max, s.curve.max_observed_time);
        y_max = std::max(y_max, s.curve.initial_value());
        for (const CurvePoint& p : s.curve.points) {
            x_max = std::max(x_max, p.time);
            y_max = std::max(y_max, p.value);
        }
    }
    if (!(x_max > 0.0)) x_max = 1.0;
    if (!(y_max > 0.0)) y_max = 1.0;
    if (y_max <= 1.0) y_max = 1.0; // probability scale

    const Frame f;
    auto x_px = [&](double t) { return f.left + f.plot_width() * (t / x_max); };
    auto y_px = [&](double v) { return f.top + f.plot_height() * (1.0 - v / y_max); };

    std::string svg;
    open_svg(svg, f, options.title);

    // Axis ticks and grid.
    const double x_step = nice_step(x_max);
    for (double t = 0.0; t <= x_max * (1.0 + 1e-12); t += x_step) {
        const double x = x_px(t);
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.top) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(f.top + f.plot_height()) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.top + f.plot_height()) + "\" x2=\"" +
               num(x) + "\" y2=\"" + num(f.top + f.plot_height() + 5.0) +
               "\" stroke=\"#000000\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(f.top + f.plot_height() + 20.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
               tick_label(t) + "</text>\n";
    }
    const double y_step = nice_step(y_max);
    for (double v = 0.0; v <= y_max * (1.0 + 1e-12); v += y_step) {
        const double y = y_px(v);
        svg += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(y) + "\" x2=\"" +
               num(f.left + f.plot_width()) + "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<line x1=\"" + num(f.left - 5.0) + "\" y1=\"" + num(y) + "\" x2=\"" +
               num(f.left) + "\" y2=\"" + num(y) + "\" stroke=\"#000000\"/>\n";
        svg += "<text x=\"" + num(f.left - 9.0) + "\" y=\"" + num(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
               tick_label(v) + "</text>\n";
    }
    draw_frame_box(svg, f);
    svg += "<text x=\"" + num(f.left + f.plot_width() / 2.0) + "\" y=\"" +
           num(f.height - 14.0) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
           escape_xml(options.x_label) + "</text>\n";
    svg += "<text x=\"18.00\" y=\"" + num(f.top + f.plot_height() / 2.0) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18.00 " +
           num(f.top + f.plot_height() / 2.0) + ")\">" + escape_xml(options.y_label) +
           "</text>\n";

    // Step polylines.
    for (std::size_t i = 0; i < series.size(); ++i) {
        const CurveSeries& s = series[i];
        const char* color = kPalette[i % kPaletteSize];
        std::string pts;
        double value = s.curve.initial_value();
        pts += num(x_px(0.0)) + "," + num(y_px(value));
        for (const CurvePoint& p : s.curve.points) {
            if (p.time > x_max) break;
            pts += " " + num(x_px(p.time)) + "," + num(y_px(value));
            value = p.value;
            pts += " " + num(x_px(p.time)) + "," + num(y_px(value));
        }
        pts += " " + num(x_px(std::min(x_max, std::max(s.curve.max_observed_time, 0.0)))) + "," +
               num(y_px(value));
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.8\"";
        if (s.dashed) svg += " stroke-dasharray=\"6,4\"";
        svg += " points=\"" + pts + "\"/>\n";
    }

    // Legend, top-left corner of the plot area.
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double ly = f.top + 16.0 + 18.0 * static_cast<double>(i);
        svg += "<line x1=\"" + num(f.left + 10.0) + "\" y1=\"" + num(ly) + "\" x2=\"" +
               num(f.left + 34.0) + "\" y2=\"" + num(ly) + "\" stroke=\"";
        svg += kPalette[i % kPaletteSize];
        svg += "\" stroke-width=\"1.8\"";
        if (series[i].dashed) svg += " stroke-dasharray=\"6,4\"";
        svg += "/>\n";
        svg += "<text x=\"" + num(f.left + 40.0) + "\" y=\"" + num(ly + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape_xml(series[i].name) +
               "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

std::string svg_forest(const ForestTable& table, const std::string& title) {
    if (table.rows.empty()) fail(ErrorCode::empty_table, "no rows to plot");

    double lo = 1.0;
    double hi = 1.0;
    for (const ForestRow& r : table.rows) {
        lo = std::min(lo, r.hr_lo);
        hi = std::max(hi, r.hr_hi);
    }
    const double log_lo = std::log(lo) - 0.15;
    const double log_hi = std::log(hi) + 0.15;

    const double row_height = 34.0;
    Frame f;
    f.left = 170.0;
    f.right = 210.0;
    f.top = 50.0;
    f.bottom = 60.0;
    f.height = f.top + f.bottom + row_height * static_cast<double>(table.rows.size());

    auto x_px = [&](double hr) {
        return f.left + f.plot_width() * (std::log(hr) - log_lo) / (log_hi - log_lo);
    };

    std::string svg;
    open_svg(svg, f, title);

    // Log-scale ticks drawn from the 1-2-5 ladder that falls inside range.
    for (double decade = 1e-3; decade <= 1e3; decade *= 10.0) {
        for (double m : {1.0, 2.0, 5.0}) {
            const double v = m * decade;
            if (std::log(v) < log_lo || std::log(v) > log_hi) continue;
            const double x = x_px(v);
            svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.top) + "\" x2=\"" + num(x) +
                   "\" y2=\"" + num(f.top + f.plot_height()) + "\" stroke=\"#dddddd\"/>\n";
            svg += "<text x=\"" + num(x) + "\" y=\"" + num(f.top + f.plot_height() + 18.0) +
                   "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
                   tick_label(v) + "</text>\n";
        }
    }
    // Reference line at HR = 1.
    svg += "<line x1=\"" + num(x_px(1.0)) + "\" y1=\"" + num(f.top) + "\" x2=\"" +
           num(x_px(1.0)) + "\" y2=\"" + num(f.top + f.plot_height()) +
           "\" stroke=\"#555555\" stroke-dasharray=\"3,3\"/>\n";
    draw_frame_box(svg, f);
    svg += "<text x=\"" + num(f.left + f.plot_width() / 2.0) + "\" y=\"" +
           num(f.height - 16.0) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">hazard ratio "
           "(log scale)</text>\n";

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const ForestRow& r = table.rows[i];
        const double y = f.top + row_height * (static_cast<double>(i) + 0.5);
        svg += "<text x=\"12.00\" y=\"" + num(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\"" +
               (r.combined ? " font-weight=\"bold\"" : "") + ">" + escape_xml(r.label) +
               "</text>\n";
        // Whisker.
        svg += "<line x1=\"" + num(x_px(r.hr_lo)) + "\" y1=\"" + num(y) + "\" x2=\"" +
               num(x_px(r.hr_hi)) + "\" y2=\"" + num(y) + "\" stroke=\"#000000\"/>\n";
        const double cx = x_px(r.hr);
        if (r.combined) {
            svg += "<polygon points=\"" + num(cx - 7.0) + "," + num(y) + " " + num(cx) + "," +
                   num(y - 7.0) + " " + num(cx + 7.0) + "," + num(y) + " " + num(cx) + "," +
                   num(y + 7.0) + "\" fill=\"#1f6fb4\"/>\n";
        } else {
            svg += "<rect x=\"" + num(cx - 5.0) + "\" y=\"" + num(y - 5.0) +
                   "\" width=\"10.00\" height=\"10.00\" fill=\"#333333\"/>\n";
        }
        char value_text[96];
        std::snprintf(value_text, sizeof(value_text), "%.2f [%.2f, %.2f]", r.hr, r.hr_lo,
                      r.hr_hi);
        svg += "<text x=\"" + num(f.width - 12.0) + "\" y=\"" + num(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
               value_text + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace aesurv
