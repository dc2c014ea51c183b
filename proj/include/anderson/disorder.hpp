#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace anderson {

enum class DisorderFamily { UniformDensity, AlphaPower };

// Single-site law mu of the potential values omega_n.
//
// UniformDensity: constant density 1/(v_max - v_min) on the support, alpha = 1.
// AlphaPower:     F(x) = ((x - v_min)/(v_max - v_min))^alpha, uniformly
//                 alpha-Hoelder with constant (v_max - v_min)^-alpha.
//
// Sampled values are multiplied by the coupling g; concentration() and
// wegner_constant() refer to the unscaled law.
struct DisorderSpec {
    DisorderFamily family = DisorderFamily::UniformDensity;
    double v_min = 0.0;
    double v_max = 1.0;
    double alpha = 1.0;
    double holder_const = 1.0;
    double coupling = 1.0;

    double width() const { return v_max - v_min; }
    // Throws ConfigError.
    void validate() const;
};

DisorderSpec uniform_disorder(double v_min, double v_max, double coupling);
DisorderSpec alpha_power_disorder(double alpha, double coupling, double v_min = 0.0, double v_max = 1.0);

// Coordinates of one random draw: (master seed, realization, site key).
struct SeedPath {
    std::uint64_t master_seed = 0;
    std::uint64_t realization_index = 0;
    std::uint64_t site_index = 0;
};

inline constexpr int kRealizationBits = 24;
inline constexpr int kSiteBits = 40;

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Seed for a named pipeline stage, derived from the master seed.
std::uint64_t stage_seed(std::uint64_t master, std::uint64_t stage_tag);

// Uniform variate in the open interval (0, 1), a pure function of the path.
// Distinct (realization, site) pairs map to distinct 64-bit words.
double uniform_variate(const SeedPath& path);

double cdf(const DisorderSpec& spec, double x);
double inverse_cdf(const DisorderSpec& spec, double u);

// g * F^{-1}(u(path)).
double draw(const DisorderSpec& spec, const SeedPath& path);

// g*omega for site keys seed.site_index, ..., seed.site_index + n_sites - 1.
Eigen::VectorXd sample_potential(const DisorderSpec& spec, const SeedPath& seed, Eigen::Index n_sites);

// S_mu(s) = sup_a mu[a, a+s], exact for the implemented families.
double concentration(const DisorderSpec& spec, double s);

// Q_mu(s): ||rho||_inf s for bounded densities, 8 S_mu(s) otherwise.
double wegner_constant(const DisorderSpec& spec, double s);

// Q_mu of the coupled law g*omega, i.e. Q_mu(s/g). Requires g > 0.
double coupled_wegner_constant(const DisorderSpec& spec, double s);

bool has_bounded_density(const DisorderSpec& spec);

void to_json(nlohmann::json& j, const DisorderSpec& spec);
void from_json(const nlohmann::json& j, DisorderSpec& spec);

} // namespace anderson
