#pragma once

#include <span>
#include <vector>

namespace anderson {

// Mean and standard error of the mean, accumulated in long double.
struct MeanEstimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
    double variance = 0.0; // unbiased sample variance
    std::size_t n = 0;
};

MeanEstimate estimate_mean(std::span<const double> xs);

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
    std::vector<double> residuals;
};

// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

} // namespace anderson
