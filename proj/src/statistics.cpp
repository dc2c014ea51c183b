#include "anderson/statistics.hpp"

#include <cmath>

#include "anderson/errors.hpp"

namespace anderson {

MeanEstimate estimate_mean(std::span<const double> xs)
{
    MeanEstimate e;
    e.n = xs.size();
    if (xs.empty())
        return e;
    long double sum = 0.0L;
    for (double x : xs)
        sum += x;
    const long double mean = sum / static_cast<long double>(xs.size());
    long double ss = 0.0L;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    e.mean = static_cast<double>(mean);
    if (xs.size() > 1) {
        e.variance = static_cast<double>(ss / static_cast<long double>(xs.size() - 1));
        e.stderr_mean = std::sqrt(e.variance / static_cast<double>(xs.size()));
    }
    return e;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigError("line fit needs at least two (x, y) points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw ConfigError("line fit needs at least two distinct x values");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        fit.residuals.push_back(r);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

} // namespace anderson
