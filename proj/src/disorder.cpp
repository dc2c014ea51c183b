#include "anderson/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "anderson/errors.hpp"

namespace anderson {

void DisorderSpec::validate() const
{
    if (!std::isfinite(v_min) || !std::isfinite(v_max) || !(v_max > v_min))
        throw ConfigError("disorder support must be a non-empty bounded interval");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("disorder alpha must lie in (0, 1]");
    if (family == DisorderFamily::UniformDensity && alpha != 1.0)
        throw ConfigError("UniformDensity requires alpha = 1");
    if (!(holder_const > 0.0))
        throw ConfigError("holder_const must be positive");
    if (!(coupling >= 0.0) || !std::isfinite(coupling))
        throw ConfigError("coupling must be finite and non-negative");
}

DisorderSpec uniform_disorder(double v_min, double v_max, double coupling)
{
    DisorderSpec spec;
    spec.family = DisorderFamily::UniformDensity;
    spec.v_min = v_min;
    spec.v_max = v_max;
    spec.alpha = 1.0;
    spec.holder_const = v_max > v_min ? 1.0 / (v_max - v_min) : 1.0;
    spec.coupling = coupling;
    spec.validate();
    return spec;
}

DisorderSpec alpha_power_disorder(double alpha, double coupling, double v_min, double v_max)
{
    DisorderSpec spec;
    spec.family = DisorderFamily::AlphaPower;
    spec.v_min = v_min;
    spec.v_max = v_max;
    spec.alpha = alpha;
    spec.holder_const = v_max > v_min ? std::pow(v_max - v_min, -alpha) : 1.0;
    spec.coupling = coupling;
    spec.validate();
    return spec;
}

std::uint64_t stage_seed(std::uint64_t master, std::uint64_t stage_tag)
{
    return mix64(mix64(master) ^ mix64(stage_tag + 0x9e3779b97f4a7c15ULL));
}

double uniform_variate(const SeedPath& path)
{
    constexpr std::uint64_t site_mask = (std::uint64_t{1} << kSiteBits) - 1;
    constexpr std::uint64_t realization_limit = std::uint64_t{1} << kRealizationBits;
    if (path.realization_index >= realization_limit)
        throw ResourceError("realization index exceeds 2^24");
    if (path.site_index > site_mask)
        throw ResourceError("site key exceeds 2^40");
    const std::uint64_t key = (path.realization_index << kSiteBits) | path.site_index;
    const std::uint64_t word = mix64(key ^ mix64(path.master_seed));
    // 53 random bits, shifted to the centre of their cell: never 0 or 1.
    return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
}

double cdf(const DisorderSpec& spec, double x)
{
    if (x <= spec.v_min)
        return 0.0;
    if (x >= spec.v_max)
        return 1.0;
    const double t = (x - spec.v_min) / spec.width();
    switch (spec.family) {
    case DisorderFamily::UniformDensity:
        return t;
    case DisorderFamily::AlphaPower:
        return std::pow(t, spec.alpha);
    }
    return 0.0;
}

double inverse_cdf(const DisorderSpec& spec, double u)
{
    u = std::clamp(u, 0.0, 1.0);
    switch (spec.family) {
    case DisorderFamily::UniformDensity:
        return spec.v_min + spec.width() * u;
    case DisorderFamily::AlphaPower:
        return spec.v_min + spec.width() * std::pow(u, 1.0 / spec.alpha);
    }
    return spec.v_min;
}

double draw(const DisorderSpec& spec, const SeedPath& path)
{
    return spec.coupling * inverse_cdf(spec, uniform_variate(path));
}

Eigen::VectorXd sample_potential(const DisorderSpec& spec, const SeedPath& seed, Eigen::Index n_sites)
{
    spec.validate();
    if (n_sites < 1)
        throw ConfigError("sample_potential needs at least one site");
    Eigen::VectorXd values(n_sites);
    SeedPath path = seed;
    for (Eigen::Index i = 0; i < n_sites; ++i) {
        path.site_index = seed.site_index + static_cast<std::uint64_t>(i);
        values[i] = draw(spec, path);
    }
    return values;
}

double concentration(const DisorderSpec& spec, double s)
{
    spec.validate();
    if (!(s > 0.0))
        throw DomainError("concentration needs s > 0");
    const double t = std::min(1.0, s / spec.width());
    switch (spec.family) {
    case DisorderFamily::UniformDensity:
        return t;
    case DisorderFamily::AlphaPower:
        // F(a+s) - F(a) is maximal at a = v_min by concavity of x^alpha.
        return std::pow(t, spec.alpha);
    }
    return 1.0;
}

bool has_bounded_density(const DisorderSpec& spec)
{
    return spec.family == DisorderFamily::UniformDensity || spec.alpha == 1.0;
}

double wegner_constant(const DisorderSpec& spec, double s)
{
    if (has_bounded_density(spec)) {
        spec.validate();
        if (!(s > 0.0))
            throw DomainError("wegner_constant needs s > 0");
        return s / spec.width();
    }
    return 8.0 * concentration(spec, s);
}

double coupled_wegner_constant(const DisorderSpec& spec, double s)
{
    if (!(spec.coupling > 0.0))
        throw ConfigError("Wegner constant of the coupled law needs coupling > 0");
    return wegner_constant(spec, s / spec.coupling);
}

namespace {

std::string family_name(DisorderFamily f)
{
    return f == DisorderFamily::UniformDensity ? "UniformDensity" : "AlphaPower";
}

} // namespace

void to_json(nlohmann::json& j, const DisorderSpec& spec)
{
    j = nlohmann::json{{"family", family_name(spec.family)},
                       {"support", {spec.v_min, spec.v_max}},
                       {"alpha", spec.alpha},
                       {"holder_const", spec.holder_const},
                       {"coupling", spec.coupling}};
}

void from_json(const nlohmann::json& j, DisorderSpec& spec)
{
    try {
        const auto family = j.at("family").get<std::string>();
        if (family == "UniformDensity")
            spec.family = DisorderFamily::UniformDensity;
        else if (family == "AlphaPower")
            spec.family = DisorderFamily::AlphaPower;
        else
            throw ConfigError("unknown disorder family '" + family + "'");
        const auto& support = j.at("support");
        if (!support.is_array() || support.size() != 2)
            throw ConfigError("disorder support must be [lo, hi]");
        spec.v_min = support[0].get<double>();
        spec.v_max = support[1].get<double>();
        spec.alpha = j.value("alpha", spec.family == DisorderFamily::UniformDensity ? 1.0 : 0.5);
        const double width = spec.v_max - spec.v_min;
        const double default_u = width > 0 ? std::pow(width, -spec.alpha) : 1.0;
        spec.holder_const = j.value("holder_const", default_u);
        spec.coupling = j.value("coupling", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed disorder spec: ") + e.what());
    }
    spec.validate();
}

} // namespace anderson
