#include "anderson/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace anderson {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

} // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label))
{
}

void SvgPlot::add_series(std::string name, std::vector<double> x, std::vector<double> y, Style style)
{
    series_.push_back({std::move(name), std::move(x), std::move(y), {}, style});
}

void SvgPlot::add_error_bars(std::vector<double> half_widths)
{
    if (!series_.empty())
        series_.back().errors = std::move(half_widths);
}

std::string SvgPlot::render(int width, int height) const
{
    const double left = 70, right = 20, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;

    auto ty = [&](double y) { return log_y_ ? std::log10(y) : y; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series_) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0))
                continue;
            const double e = i < s.errors.size() ? s.errors[i] : 0.0;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            const double lo = log_y_ ? ty(s.y[i]) : s.y[i] - e;
            const double hi = log_y_ ? ty(s.y[i]) : s.y[i] + e;
            y0 = std::min(y0, lo);
            y1 = std::max(y1, hi);
            if (s.style == Style::Bars && !log_y_)
                y0 = std::min(y0, 0.0);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    if (x1 == x0)
        x1 = x0 + 1;
    if (y1 == y0)
        y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    bool has_bars = false;
    for (const auto& s : series_)
        has_bars = has_bars || s.style == Style::Bars;
    if (has_bars) {
        x0 -= 0.5;
        x1 += 0.5;
    }

    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };
    auto syr = [&](double raw) { return top + (1.0 - (raw - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_)
      << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0;
        const double yv = y0 + (y1 - y0) * k / 5.0;
        o << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << num(xv)
          << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << syr(yv) + 4 << "\" text-anchor=\"end\">"
          << (log_y_ ? "1e" + num(yv) : num(yv)) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label_) << "</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">" << escape(y_label_) << "</text>\n";

    for (std::size_t si = 0; si < series_.size(); ++si) {
        const auto& s = series_[si];
        const char* colour = kPalette[si % 6];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (s.style == Style::Line) {
            o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < n; ++i)
                if (std::isfinite(s.y[i]) && (!log_y_ || s.y[i] > 0))
                    o << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
            o << "\"/>\n";
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0))
                continue;
            if (s.style == Style::Points)
                o << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i]) << "\" r=\"3\" fill=\"" << colour
                  << "\"/>\n";
            if (s.style == Style::Bars) {
                const double w = 0.8 * pw / (x1 - x0);
                const double base = syr(std::max(y0, 0.0));
                const double yt = sy(s.y[i]);
                o << "<rect x=\"" << sx(s.x[i]) - w / 2 << "\" y=\"" << std::min(yt, base) << "\" width=\"" << w
                  << "\" height=\"" << std::abs(base - yt) << "\" fill=\"" << colour << "\" fill-opacity=\"0.5\"/>\n";
            }
            if (i < s.errors.size() && s.errors[i] > 0 && !log_y_)
                o << "<line x1=\"" << sx(s.x[i]) << "\" x2=\"" << sx(s.x[i]) << "\" y1=\""
                  << sy(s.y[i] - s.errors[i]) << "\" y2=\"" << sy(s.y[i] + s.errors[i]) << "\" stroke=\"" << colour
                  << "\"/>\n";
        }
        o << "<rect x=\"" << left + pw - 150 << "\" y=\"" << top + 8 + 16 * si << "\" width=\"10\" height=\"10\" fill=\""
          << colour << "\"/>\n";
        o << "<text x=\"" << left + pw - 135 << "\" y=\"" << top + 17 + 16 * si << "\">" << escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace anderson
