#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anderson/disorder.hpp"
#include "anderson/lattice.hpp"

namespace anderson {

struct CountDistribution {
    std::map<long, std::size_t> histogram;
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0; // unbiased
    // gamma_lambda(I x Q) = |I|^alpha D^alpha |Q| when known.
    std::optional<double> target_intensity;
    // Uncertainty of the target (propagated from the D^alpha estimate).
    double target_error = 0.0;

    static CountDistribution from_samples(std::span<const long> samples, std::optional<double> target = {},
                                          double target_error = 0.0);
};

struct PoissonThresholds {
    double tv_max = 0.1;
    double dispersion_lo = 0.8;
    double dispersion_hi = 1.2;
    double intensity_rel = 0.2;
    double chi_square_p_min = 1e-3;
    std::size_t min_samples = 1000;
};

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);

struct PoissonFitReport {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
    double dispersion = 0.0; // variance / mean
    double tv_distance = 0.0; // to Poisson(sample mean)
    double chi_square = 0.0;  // vs Poisson(target, or sample mean)
    int dof = 0;
    double chi_square_p = 0.0;
    bool chi_square_pass = false;
    bool shape_pass = false;
    std::optional<bool> intensity_pass;
    double intensity_z = 0.0; // (mean - target) / combined error
    Verdict verdict = Verdict::Fail;
    std::string note;
    PoissonThresholds thresholds;
};

double poisson_pmf(long k, double rate);

// Total variation distance between the empirical law and Poisson(rate),
// including the Poisson mass outside the observed support.
double tv_to_poisson(const CountDistribution& d, double rate);

struct ChiSquareResult {
    double statistic = 0.0;
    int bins = 0;
    int dof = 0;
    double p_value = 0.0;
};

// Bins k = 0, 1, ... merged from the left until every expected count is >= 5;
// the upper tail is pooled into the last bin.
ChiSquareResult chi_square_poisson(const CountDistribution& d, double rate, int estimated_parameters);

// Throws ConfigError with fewer than thresholds.min_samples samples.
PoissonFitReport poisson_fit(const CountDistribution& d, const PoissonThresholds& thresholds = {});

struct CharFnProfile {
    std::vector<double> t_grid;
    std::vector<std::complex<double>> empirical;
    std::vector<std::complex<double>> target;
    double sup_distance = 0.0;
};

// Empirical E[e^{itN}] against exp(gamma (e^{it} - 1)). Throws ConfigError
// for t outside [-pi, pi].
CharFnProfile charfn_profile(std::span<const long> samples, std::span<const double> t_grid, double gamma);

struct InequalityReport {
    std::string statistic;
    std::size_t n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    double q_mu = 0.0;
    bool pass = false;
    bool trivially_satisfied = false; // Q_mu(|I|) >= 1
};

// E Tr E_{H_Lambda}(I) <= Q_mu(|I|) |Lambda|, Q_mu taken for the coupled law.
// Passes iff mean - 3 sigma <= bound. Needs >= 500 realizations.
InequalityReport wegner_check(const DisorderSpec& spec, const BoxGeometry& geom, double lo, double hi,
                              std::size_t n_realizations, std::uint64_t master_seed, int workers = 1);

// E[N (N - 1)] <= (Q_mu(|I|) |Lambda|)^2 with N = Tr E_{H_Lambda}(I).
InequalityReport minami_check(const DisorderSpec& spec, const BoxGeometry& geom, double lo, double hi,
                              std::size_t n_realizations, std::uint64_t master_seed, int workers = 1);

struct RemainderInput {
    long L = 0;
    long sub_scale = 0;
    std::size_t gamma_size = 0;
    std::vector<long> cell_counts; // pooled over cells and realizations
};

struct RemainderLevel {
    long L = 0;
    long sub_scale = 0;
    std::size_t gamma_size = 0;
    double factorial_moment = 0.0; // E[N (N - 1)] per cell
    double std_error = 0.0;
    double audit = 0.0; // |Gamma_L| E[N (N - 1)]
};

struct RemainderAudit {
    std::vector<RemainderLevel> levels;
    double slope = 0.0; // log-log slope of audit vs L
    double predicted_slope = 0.0; // -d (1 - a)
    double relative_error = 0.0;
    double doubling_factor = 0.0; // 2^{-d(1-a)}
    bool fitted = false;
    double tolerance = 0.3;
    bool pass = false;
};

RemainderAudit remainder_audit(std::span<const RemainderInput> inputs, int d, double a, double tolerance = 0.3);

void to_json(nlohmann::json& j, const CountDistribution& d);
void to_json(nlohmann::json& j, const PoissonFitReport& r);
void to_json(nlohmann::json& j, const CharFnProfile& p);
void to_json(nlohmann::json& j, const InequalityReport& r);
void to_json(nlohmann::json& j, const RemainderAudit& a);

} // namespace anderson
