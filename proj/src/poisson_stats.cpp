#include "anderson/poisson_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "anderson/errors.hpp"
#include "anderson/parallel.hpp"
#include "anderson/spectral.hpp"
#include "anderson/statistics.hpp"

namespace anderson {

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::Pass:
        return "pass";
    case Verdict::Fail:
        return "fail";
    case Verdict::Inconclusive:
        return "inconclusive";
    }
    return "?";
}

CountDistribution CountDistribution::from_samples(std::span<const long> samples, std::optional<double> target,
                                                  double target_error)
{
    CountDistribution d;
    d.target_intensity = target;
    d.target_error = target_error;
    d.n = samples.size();
    std::vector<double> values;
    values.reserve(samples.size());
    for (long k : samples) {
        if (k < 0)
            throw DomainError("counts must be non-negative");
        ++d.histogram[k];
        values.push_back(static_cast<double>(k));
    }
    const MeanEstimate m = estimate_mean(values);
    d.mean = m.mean;
    d.variance = m.variance;
    return d;
}

double poisson_pmf(long k, double rate)
{
    if (k < 0)
        return 0.0;
    if (rate <= 0.0)
        return k == 0 ? 1.0 : 0.0;
    return boost::math::pdf(boost::math::poisson_distribution<double>(rate), static_cast<double>(k));
}

double tv_to_poisson(const CountDistribution& d, double rate)
{
    if (d.n == 0)
        return 0.0;
    double diff = 0.0;
    double covered = 0.0;
    for (const auto& [k, count] : d.histogram) {
        const double p = poisson_pmf(k, rate);
        diff += std::abs(static_cast<double>(count) / static_cast<double>(d.n) - p);
        covered += p;
    }
    return std::clamp(0.5 * (diff + std::max(0.0, 1.0 - covered)), 0.0, 1.0);
}

ChiSquareResult chi_square_poisson(const CountDistribution& d, double rate, int estimated_parameters)
{
    ChiSquareResult result;
    if (d.n == 0 || rate <= 0.0)
        return result;
    const double n = static_cast<double>(d.n);
    const long k_top = std::max(d.histogram.empty() ? 0L : d.histogram.rbegin()->first,
                                static_cast<long>(std::ceil(rate + 10.0 * std::sqrt(rate) + 10.0)));

    // Bin edges [start_b, start_{b+1}); the last bin extends to infinity.
    std::vector<long> starts{0};
    double expected = 0.0;
    for (long k = 0; k <= k_top; ++k) {
        expected += n * poisson_pmf(k, rate);
        if (expected >= 5.0) {
            starts.push_back(k + 1);
            expected = 0.0;
        }
    }
    starts.pop_back(); // remaining tail joins the last closed bin
    if (starts.empty())
        starts.push_back(0);

    const std::size_t bins = starts.size();
    std::vector<double> observed(bins, 0.0), expect(bins, 0.0);
    auto bin_of = [&](long k) {
        return static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), k) - starts.begin()) - 1;
    };
    for (const auto& [k, count] : d.histogram)
        observed[bin_of(k)] += static_cast<double>(count);
    double head = 0.0;
    for (std::size_t b = 0; b + 1 < bins; ++b) {
        double p = 0.0;
        for (long k = starts[b]; k < starts[b + 1]; ++k)
            p += poisson_pmf(k, rate);
        expect[b] = n * p;
        head += p;
    }
    expect[bins - 1] = n * std::max(0.0, 1.0 - head);

    for (std::size_t b = 0; b < bins; ++b)
        if (expect[b] > 0.0)
            result.statistic += (observed[b] - expect[b]) * (observed[b] - expect[b]) / expect[b];
    result.bins = static_cast<int>(bins);
    result.dof = result.bins - 1 - estimated_parameters;
    if (result.dof >= 1) {
        const boost::math::chi_squared_distribution<double> chi(result.dof);
        result.p_value = boost::math::cdf(boost::math::complement(chi, result.statistic));
    } else {
        result.p_value = std::nan("");
    }
    return result;
}

PoissonFitReport poisson_fit(const CountDistribution& d, const PoissonThresholds& thresholds)
{
    if (d.n < thresholds.min_samples)
        throw ConfigError("Poisson fit needs at least " + std::to_string(thresholds.min_samples) + " samples");
    PoissonFitReport r;
    r.thresholds = thresholds;
    r.n = d.n;
    r.mean = d.mean;
    r.variance = d.variance;
    if (d.mean <= 0.0) {
        r.verdict = Verdict::Inconclusive;
        r.note = "all samples are zero";
        return r;
    }
    r.dispersion = d.variance / d.mean;
    r.tv_distance = tv_to_poisson(d, d.mean);
    const bool has_target = d.target_intensity && *d.target_intensity > 0.0;
    const ChiSquareResult chi =
        chi_square_poisson(d, has_target ? *d.target_intensity : d.mean, has_target ? 0 : 1);
    r.chi_square = chi.statistic;
    r.dof = chi.dof;
    r.chi_square_p = chi.p_value;
    r.chi_square_pass = chi.dof >= 1 && chi.p_value >= thresholds.chi_square_p_min;
    r.shape_pass = r.tv_distance <= thresholds.tv_max && r.dispersion >= thresholds.dispersion_lo &&
                   r.dispersion <= thresholds.dispersion_hi;
    if (has_target) {
        const double target = *d.target_intensity;
        r.intensity_pass = std::abs(d.mean - target) <= thresholds.intensity_rel * target;
        const double sigma = std::hypot(std::sqrt(d.variance / static_cast<double>(d.n)), d.target_error);
        r.intensity_z = sigma > 0.0 ? (d.mean - target) / sigma : 0.0;
    }
    r.verdict = r.shape_pass && r.intensity_pass.value_or(true) ? Verdict::Pass : Verdict::Fail;
    if (chi.dof < 1)
        r.note = "too few populated bins for a chi-square test";
    return r;
}

CharFnProfile charfn_profile(std::span<const long> samples, std::span<const double> t_grid, double gamma)
{
    CharFnProfile profile;
    const std::complex<double> i_unit(0.0, 1.0);
    for (double t : t_grid) {
        if (!(t >= -std::numbers::pi && t <= std::numbers::pi))
            throw ConfigError("characteristic-function grid must lie in [-pi, pi]");
        std::complex<double> sum = 0.0;
        for (long k : samples)
            sum += std::exp(i_unit * (t * static_cast<double>(k)));
        const std::complex<double> empirical =
            samples.empty() ? std::complex<double>(1.0) : sum / static_cast<double>(samples.size());
        const std::complex<double> target = std::exp(gamma * (std::exp(i_unit * t) - 1.0));
        profile.t_grid.push_back(t);
        profile.empirical.push_back(empirical);
        profile.target.push_back(target);
        profile.sup_distance = std::max(profile.sup_distance, std::abs(empirical - target));
    }
    return profile;
}

namespace {

std::vector<long> window_counts(const DisorderSpec& spec, const BoxGeometry& geom, double lo, double hi,
                                std::size_t n_realizations, std::uint64_t master_seed, int workers)
{
    if (n_realizations < 500)
        throw ConfigError("Wegner/Minami checks need at least 500 realizations");
    return parallel_map(n_realizations, workers, [&](std::size_t r) {
        const FiniteHamiltonian H = build_hamiltonian(geom, spec, SeedPath{master_seed, r, 0});
        return static_cast<long>(count_in_window(H, lo, hi));
    });
}

double coupled_q(const DisorderSpec& spec, double width)
{
    return width > 0.0 ? coupled_wegner_constant(spec, width) : 0.0;
}

} // namespace

InequalityReport wegner_check(const DisorderSpec& spec, const BoxGeometry& geom, double lo, double hi,
                              std::size_t n_realizations, std::uint64_t master_seed, int workers)
{
    const double q = coupled_q(spec, std::max(0.0, hi - lo));
    const auto counts = window_counts(spec, geom, lo, hi, n_realizations, master_seed, workers);
    std::vector<double> values(counts.begin(), counts.end());
    const MeanEstimate m = estimate_mean(values);
    InequalityReport r;
    r.statistic = "E Tr E(I)";
    r.n = m.n;
    r.mean = m.mean;
    r.std_error = m.stderr_mean;
    r.q_mu = q;
    r.bound = q * static_cast<double>(geom.size());
    r.trivially_satisfied = q >= 1.0;
    r.pass = r.mean - 3.0 * r.std_error <= r.bound;
    return r;
}

InequalityReport minami_check(const DisorderSpec& spec, const BoxGeometry& geom, double lo, double hi,
                              std::size_t n_realizations, std::uint64_t master_seed, int workers)
{
    const double q = coupled_q(spec, std::max(0.0, hi - lo));
    const auto counts = window_counts(spec, geom, lo, hi, n_realizations, master_seed, workers);
    std::vector<double> values;
    values.reserve(counts.size());
    for (long k : counts)
        values.push_back(static_cast<double>(k) * static_cast<double>(k - 1));
    const MeanEstimate m = estimate_mean(values);
    InequalityReport r;
    r.statistic = "E N(N-1)";
    r.n = m.n;
    r.mean = m.mean;
    r.std_error = m.stderr_mean;
    r.q_mu = q;
    const double linear = q * static_cast<double>(geom.size());
    r.bound = linear * linear;
    r.trivially_satisfied = q >= 1.0;
    r.pass = r.mean - 3.0 * r.std_error <= r.bound;
    return r;
}

RemainderAudit remainder_audit(std::span<const RemainderInput> inputs, int d, double a, double tolerance)
{
    RemainderAudit audit;
    audit.predicted_slope = -d * (1.0 - a);
    audit.doubling_factor = std::pow(2.0, audit.predicted_slope);
    audit.tolerance = tolerance;
    std::vector<double> x, y;
    for (const auto& in : inputs) {
        std::vector<double> moments;
        moments.reserve(in.cell_counts.size());
        for (long k : in.cell_counts)
            moments.push_back(static_cast<double>(k) * static_cast<double>(k - 1));
        const MeanEstimate m = estimate_mean(moments);
        RemainderLevel level;
        level.L = in.L;
        level.sub_scale = in.sub_scale;
        level.gamma_size = in.gamma_size;
        level.factorial_moment = m.mean;
        level.std_error = m.stderr_mean;
        level.audit = static_cast<double>(in.gamma_size) * m.mean;
        audit.levels.push_back(level);
        if (level.audit > 0.0) {
            x.push_back(std::log(static_cast<double>(in.L)));
            y.push_back(std::log(level.audit));
        }
    }
    if (x.size() >= 2 && x.size() == inputs.size()) {
        audit.slope = fit_line(x, y).slope;
        audit.fitted = true;
        audit.relative_error = std::abs(audit.slope - audit.predicted_slope) / std::abs(audit.predicted_slope);
        audit.pass = audit.relative_error <= tolerance;
    }
    return audit;
}

void to_json(nlohmann::json& j, const CountDistribution& d)
{
    nlohmann::json histogram = nlohmann::json::object();
    for (const auto& [k, count] : d.histogram)
        histogram[std::to_string(k)] = count;
    j = nlohmann::json{{"histogram", histogram}, {"n", d.n}, {"mean", d.mean}, {"variance", d.variance}};
    j["target_intensity"] = d.target_intensity ? nlohmann::json(*d.target_intensity) : nlohmann::json(nullptr);
    j["target_error"] = d.target_error;
}

void to_json(nlohmann::json& j, const PoissonFitReport& r)
{
    auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j = nlohmann::json{{"n", r.n},
                       {"mean", r.mean},
                       {"variance", r.variance},
                       {"dispersion", r.dispersion},
                       {"tv_distance", r.tv_distance},
                       {"chi_square", r.chi_square},
                       {"dof", r.dof},
                       {"chi_square_p", finite_or_null(r.chi_square_p)},
                       {"chi_square_pass", r.chi_square_pass},
                       {"shape_pass", r.shape_pass},
                       {"intensity_z", r.intensity_z},
                       {"verdict", to_string(r.verdict)},
                       {"note", r.note},
                       {"thresholds",
                        {{"tv_max", r.thresholds.tv_max},
                         {"dispersion", {r.thresholds.dispersion_lo, r.thresholds.dispersion_hi}},
                         {"intensity_rel", r.thresholds.intensity_rel},
                         {"chi_square_p_min", r.thresholds.chi_square_p_min}}}};
    j["intensity_pass"] = r.intensity_pass ? nlohmann::json(*r.intensity_pass) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const CharFnProfile& p)
{
    j = nlohmann::json{{"t", p.t_grid}, {"sup_distance", p.sup_distance}};
    for (std::size_t i = 0; i < p.t_grid.size(); ++i) {
        j["empirical"].push_back({p.empirical[i].real(), p.empirical[i].imag()});
        j["target"].push_back({p.target[i].real(), p.target[i].imag()});
    }
}

void to_json(nlohmann::json& j, const InequalityReport& r)
{
    j = nlohmann::json{{"statistic", r.statistic}, {"n", r.n},         {"mean", r.mean},
                       {"std_error", r.std_error}, {"bound", r.bound}, {"q_mu", r.q_mu},
                       {"pass", r.pass},           {"trivially_satisfied", r.trivially_satisfied}};
}

void to_json(nlohmann::json& j, const RemainderAudit& a)
{
    j = nlohmann::json{{"slope", a.slope},
                       {"predicted_slope", a.predicted_slope},
                       {"relative_error", a.relative_error},
                       {"doubling_factor", a.doubling_factor},
                       {"fitted", a.fitted},
                       {"tolerance", a.tolerance},
                       {"pass", a.pass}};
    j["levels"] = nlohmann::json::array();
    for (const auto& l : a.levels)
        j["levels"].push_back({{"L", l.L},
                               {"sub_scale", l.sub_scale},
                               {"gamma_size", l.gamma_size},
                               {"factorial_moment", l.factorial_moment},
                               {"std_error", l.std_error},
                               {"audit", l.audit}});
}

} // namespace anderson
