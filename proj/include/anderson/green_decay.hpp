#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "anderson/disorder.hpp"
#include "anderson/lattice.hpp"

namespace anderson {

struct SitePair {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    long distance = 0; // |n - m|_1
};

// Pairs (centre, centre + r e_0) for each requested distance r; pairs that
// would leave the box are dropped.
std::vector<SitePair> axis_pairs(const BoxGeometry& geom, std::span<const long> distances);

// Monte Carlo fractional moments E|G(z; n, m)|^s binned by distance, with a
// least-squares fit log E|G|^s = log C - r |n - m|.
struct DecayEstimate {
    double s = 0.5;
    std::complex<double> z;
    std::size_t n_realizations = 0;
    std::vector<long> distances;
    std::vector<double> means;
    std::vector<double> std_errors;
    std::vector<double> log_means;
    std::vector<double> log_std_errors;
    double log_c = 0.0;
    double rate = 0.0; // r
    double r_squared = 0.0;
    std::vector<double> residuals;
    // Largest |G|^s seen; never exceeds (1/Im z)^s.
    double max_sample = 0.0;
};

// Throws ConfigError if fewer than 4 distinct distances, s outside (0,1),
// fewer than 100 realizations, or Im z <= 0.
DecayEstimate estimate_fractional_moments(const DisorderSpec& spec, const BoxGeometry& geom, double s,
                                          std::complex<double> z, std::span<const SitePair> pairs,
                                          std::size_t n_realizations, std::uint64_t master_seed, int workers = 1);

// (1/r) [ (1-s) d/alpha + d + (d-1) a ]; gamma_log must exceed it.
// Throws DomainError for r <= 0.
double margin_threshold(double r, double s, int d, double alpha, double a);

void to_json(nlohmann::json& j, const DecayEstimate& e);
// distance,log_mean,stderr rows.
void write_decay_csv(std::ostream& out, const DecayEstimate& e);

} // namespace anderson
