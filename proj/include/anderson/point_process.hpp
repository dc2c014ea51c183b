#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anderson/disorder.hpp"
#include "anderson/lattice.hpp"

namespace anderson {

enum class MeasureKind { Xi, EtaP, EtaTildeP, EtaL };

std::string to_string(MeasureKind kind);

// Window I x Q at scale L around the reference energy lambda, I = [-c, c].
struct WindowSpec {
    double lambda = 0.0;
    double c = 1.0;
    Rectangle Q = unit_cube(1);
    long L = 2;
    double alpha = 1.0;

    int dim() const { return Q.dim(); }
    double beta() const;
    // lambda + beta_L^-1 I as the half-open energy window [lo, hi).
    double energy_lo() const;
    double energy_hi() const;
    void validate() const;
};

struct CountSample {
    MeasureKind kind = MeasureKind::Xi;
    double value = 0.0;
    std::size_t realization = 0;
    WindowSpec window;
};

// Box LQ enlarged by `padding` sites on every side.
BoxGeometry host_box(const WindowSpec& w, long padding);

// Tr(chi_LQ E_H(lambda + beta^-1 I) chi_LQ) on the host box. Throws
// DomainError if LQ is not inside the host box.
CountSample xi_count(const FiniteHamiltonian& host, const WindowSpec& w);

// Same functional for H restricted to the cell (potential shared with every
// other box through the global site keys).
CountSample eta_p_count(const BoxGeometry& cell, const DisorderSpec& spec, const SeedPath& seed,
                        const WindowSpec& w);

// Eigenvalue count of the cell in the window, assigned to the anchor
// p l_L / L; zero when the anchor is outside Q.
CountSample eta_tilde_count(const BoxPartition& partition, std::size_t cell, const DisorderSpec& spec,
                            const SeedPath& seed, const WindowSpec& w);

// Sum of eta_tilde over Gamma_L.
CountSample eta_L_count(const BoxPartition& partition, const DisorderSpec& spec, const SeedPath& seed,
                        const WindowSpec& w);

// G(z;n,n) - G^B(z;n,n) and  -sum_{(m,k) in dB} G(z;n,k) G^B(z;m,n).
// For H = Delta + V with unit hopping the geometric resolvent identity holds
// with the minus sign; pairs whose outer site k lies outside the host box
// carry no hopping and drop out.
struct PerturbationTerms {
    std::complex<double> lhs;
    std::complex<double> rhs;
    double residual() const { return std::abs(lhs - rhs); }
};

// H_cell must be H_global restricted to its box; n must be at distance
// > margin from the cell boundary (DomainError otherwise).
PerturbationTerms perturbation_identity(const FiniteHamiltonian& H_global, const FiniteHamiltonian& H_cell,
                                        std::complex<double> z, const Site& n, long margin);

// Everything one realization contributes to the sweeps.
struct RealizationRecord {
    std::size_t realization = 0;
    double xi = 0.0;
    double eta_p_sum = 0.0;
    long eta_L = 0;
    // Full eigenvalue count of each cell in the window (I x R^d).
    std::vector<long> cell_counts;
    double gap() const { return std::abs(xi - static_cast<double>(eta_L)); }
};

struct RealizationOptions {
    bool with_xi = true;
    bool with_eta_p = true;
    long padding = -1; // < 0: 2 l_L
};

RealizationRecord simulate_realization(const DisorderSpec& spec, const WindowSpec& w, const BoxPartition& partition,
                                       std::uint64_t master_seed, std::size_t realization,
                                       const RealizationOptions& options = {});

struct GapEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

// Monte Carlo E|xi - eta_L|. Throws ConfigError for zero realizations.
GapEstimate xi_eta_gap(const DisorderSpec& spec, const WindowSpec& w, const BoxPartition& partition,
                       std::size_t n_realizations, std::uint64_t master_seed, int workers = 1, long padding = -1);

void to_json(nlohmann::json& j, const WindowSpec& w);
void from_json(const nlohmann::json& j, WindowSpec& w);
// One JSON-lines record: kind, realization, L, lambda, c, Q, value.
nlohmann::json sample_record(const CountSample& s);

} // namespace anderson
