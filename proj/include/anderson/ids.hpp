#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anderson/disorder.hpp"
#include "anderson/lattice.hpp"

namespace anderson {

// beta_L = L^{d/alpha}; an exact integer power whenever d/alpha is an integer.
double scaling_beta(long L, int d, double alpha);

// Finite-volume IDS proxy E[#{E_j < E}] / |Lambda| on an energy grid.
struct IdsTable {
    std::vector<double> energies;
    std::vector<double> nu_hat;
    std::vector<double> std_errors;
    Eigen::Index box_size = 0;
    std::size_t n_realizations = 0;
};

// Box is the cube [0, side)^d. Throws ConfigError for grid points outside
// [-2d - g max|supp|, 2d + g max|supp|] or an empty grid.
IdsTable estimate_ids(const DisorderSpec& spec, int d, long side, std::span<const double> energies,
                      std::size_t n_realizations, std::uint64_t master_seed, int workers = 1);

// Anything that can report nu on a half-open interval.
class IdsSource {
public:
    virtual ~IdsSource() = default;
    // nu([lo, hi)).
    virtual double measure(double lo, double hi) const = 0;
    // Energy scale below which the source carries no information.
    virtual double resolution() const = 0;
};

// IDS proxy from eigenvalues pooled over independent realizations.
class PooledSpectrum final : public IdsSource {
public:
    PooledSpectrum(std::vector<double> eigenvalues, double total_sites, std::size_t n_realizations);

    double measure(double lo, double hi) const override;
    double resolution() const override;
    // Counting (Poisson) error of measure().
    double measure_error(double lo, double hi) const;
    std::size_t count(double lo, double hi) const;

    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    double total_sites() const { return total_sites_; }
    std::size_t n_realizations() const { return n_realizations_; }

private:
    std::vector<double> eigenvalues_;
    double total_sites_;
    std::size_t n_realizations_;
};

PooledSpectrum sample_pooled_spectrum(const DisorderSpec& spec, int d, long side, std::size_t n_realizations,
                                      std::uint64_t master_seed, int workers = 1);

// Piecewise-linear interpolation of an IdsTable.
class TabulatedIds final : public IdsSource {
public:
    explicit TabulatedIds(IdsTable table);
    double nu(double E) const;
    double measure(double lo, double hi) const override;
    double resolution() const override;

private:
    IdsTable table_;
};

// E <delta_c, E_H([lo,hi)) delta_c> at the box centre c, averaged over
// realizations: the single-site IDS proxy.
struct SingleSiteEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
SingleSiteEstimate single_site_measure(const DisorderSpec& spec, int d, long side, double lo, double hi,
                                       std::size_t n_realizations, std::uint64_t master_seed, int workers = 1);

struct FracDerivEstimate {
    double lambda = 0.0;
    double alpha = 1.0;
    std::vector<double> epsilons;
    // nu(lambda - eps, lambda + eps) / (2 eps)^alpha.
    std::vector<double> ratios;
    std::optional<double> d_alpha; // reported when the last three ratios agree within 10%
    double D_alpha = 0.0;          // max over the tail (proxy for the limsup)
    bool stabilized = false;
    bool finite = true; // false when ratios blow up like (2 eps)^-alpha (atom)
};

// Throws ConfigError unless epsilons are strictly decreasing and positive,
// PrecisionError if any epsilon is below the source's resolution.
FracDerivEstimate fractional_derivative(const IdsSource& source, double lambda, double alpha,
                                        std::span<const double> epsilons);

struct ScanPoint {
    long L = 0;
    double beta = 0.0;
    double value = 0.0; // L^d nu(lambda + beta^-1 I)
    bool selected = false;
};

// Scan of L^d nu(lambda + beta_L^-1 [-c, c]). Points at which the window
// drops below the source resolution are cut off with a warning. `selected`
// marks a heuristic subsequence: the L values attaining the running limsup
// (maximum over all larger L in the scan).
struct MeasureScan {
    std::vector<ScanPoint> points;
    bool truncated = false;
    std::string warning;
};

MeasureScan scaled_measure_scan(const IdsSource& source, double lambda, double c, double alpha, int d,
                                std::span<const long> L_list);

void write_ids_csv(std::ostream& out, const IdsTable& table);
void write_scan_csv(std::ostream& out, const MeasureScan& scan);
void to_json(nlohmann::json& j, const FracDerivEstimate& e);
void to_json(nlohmann::json& j, const MeasureScan& scan);

} // namespace anderson
