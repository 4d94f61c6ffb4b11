#pragma once

#include <string>
#include <utility>
#include <vector>

namespace deqcert {

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

// Line chart written as a standalone SVG document. Output depends only on
// the fields, so identical inputs give identical bytes.
struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = true;
    bool log_y = false;
    int width = 720;
    int height = 480;
    std::vector<SvgSeries> series;

    std::string render() const;
};

std::string xml_escape(const std::string& text);

} // namespace deqcert
