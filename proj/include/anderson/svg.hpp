#pragma once

#include <string>
#include <utility>
#include <vector>

namespace anderson {

// Minimal line/scatter/bar chart written as standalone SVG.
class SvgPlot {
public:
    enum class Style { Line, Points, Bars };

    SvgPlot(std::string title, std::string x_label, std::string y_label);

    void add_series(std::string name, std::vector<double> x, std::vector<double> y, Style style);
    // Vertical error bars for the most recently added series.
    void add_error_bars(std::vector<double> half_widths);
    void set_log_y(bool on) { log_y_ = on; }

    std::string render(int width = 640, int height = 420) const;

private:
    struct Series {
        std::string name;
        std::vector<double> x;
        std::vector<double> y;
        std::vector<double> errors;
        Style style;
    };

    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<Series> series_;
    bool log_y_ = false;
};

} // namespace anderson
