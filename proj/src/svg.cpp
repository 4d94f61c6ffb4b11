#include "deqcert/svg.hpp"

#include "deqcert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace deqcert {

namespace {

const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double map(double v) const { return log ? std::log10(v) : v; }
    double unit(double v) const { return hi == lo ? 0.5 : (map(v) - lo) / (hi - lo); }
};

Axis make_axis(const std::vector<double>& values, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        if (log && !(v > 0.0)) throw ConfigError("svg: log axis needs positive values");
        lo = std::min(lo, a.map(v));
        hi = std::max(hi, a.map(v));
    }
    if (values.empty()) lo = 0.0, hi = 1.0;
    if (log) {
        a.lo = std::floor(lo);
        a.hi = std::max(std::ceil(hi), a.lo + 1.0);
    } else {
        const double pad = hi > lo ? 0.05 * (hi - lo) : 0.5;
        a.lo = lo - pad;
        a.hi = hi + pad;
    }
    return a;
}

std::vector<double> ticks(const Axis& a) {
    std::vector<double> out;
    if (a.log) {
        for (double e = a.lo; e <= a.hi + 1e-9; e += 1.0) out.push_back(std::pow(10.0, e));
    } else {
        for (int i = 0; i <= 4; ++i) out.push_back(a.lo + (a.hi - a.lo) * i / 4.0);
    }
    return out;
}

} // namespace

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

std::string SvgPlot::render() const {
    std::vector<double> xs, ys;
    for (const SvgSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) throw ConfigError("svg: non-finite point in " + s.label);
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    const Axis ax = make_axis(xs, log_x);
    const Axis ay = make_axis(ys, log_y);

    const double left = 80, right = 180, top = 40, bottom = 60;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const auto px = [&](double x) { return left + ax.unit(x) * pw; };
    const auto py = [&](double y) { return top + (1.0 - ay.unit(y)) * ph; };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         xml_escape(title) + "</text>\n";
    s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ticks(ax)) {
        const double x = px(t);
        s += "<line x1=\"" + num(x) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
             num(top + ph + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(x) + "\" y=\"" + num(top + ph + 20) + "\" text-anchor=\"middle\" font-size=\"11\">" +
             tick_label(t) + "</text>\n";
    }
    for (double t : ticks(ay)) {
        const double y = py(t);
        s += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left) + "\" y2=\"" + num(y) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
             tick_label(t) + "</text>\n";
    }
    s += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 15.0) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + xml_escape(x_label) + "</text>\n";
    s += "<text x=\"20\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 " +
         num(top + ph / 2) + ")\">" + xml_escape(y_label) + "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const SvgSeries& ser = series[i];
        const std::string color = palette[i % std::size(palette)];
        std::string pts;
        for (const auto& [x, y] : ser.points) {
            if (!pts.empty()) pts += ' ';
            pts += num(px(x)) + "," + num(py(y));
        }
        s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"";
        if (ser.dashed) s += " stroke-dasharray=\"6 4\"";
        s += " points=\"" + pts + "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(i) + 10.0;
        s += "<line x1=\"" + num(left + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 30) +
             "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"";
        if (ser.dashed) s += " stroke-dasharray=\"6 4\"";
        s += "/>\n";
        s += "<text x=\"" + num(left + pw + 35) + "\" y=\"" + num(ly + 4) + "\" font-size=\"11\">" +
             xml_escape(ser.label) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace deqcert
