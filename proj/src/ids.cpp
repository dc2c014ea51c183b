#include "anderson/ids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "anderson/errors.hpp"
#include "anderson/parallel.hpp"
#include "anderson/spectral.hpp"
#include "anderson/statistics.hpp"

namespace anderson {

double scaling_beta(long L, int d, double alpha)
{
    if (L < 1 || d < 1 || !(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("scaling needs L >= 1, d >= 1, alpha in (0, 1]");
    const double exponent = static_cast<double>(d) / alpha;
    const double rounded = std::round(exponent);
    if (std::abs(exponent - rounded) < 1e-12) {
        double beta = 1.0;
        for (long k = 0; k < static_cast<long>(rounded); ++k)
            beta *= static_cast<double>(L);
        return beta;
    }
    return std::pow(static_cast<double>(L), exponent);
}

namespace {

std::vector<double> sorted_eigenvalues(const FiniteHamiltonian& H)
{
    const SpectralData S = eigensolve(H, false);
    std::vector<double> values(S.eigenvalues.data(), S.eigenvalues.data() + S.size());
    std::sort(values.begin(), values.end());
    return values;
}

} // namespace

IdsTable estimate_ids(const DisorderSpec& spec, int d, long side, std::span<const double> energies,
                      std::size_t n_realizations, std::uint64_t master_seed, int workers)
{
    spec.validate();
    if (energies.empty())
        throw ConfigError("IDS grid is empty");
    if (n_realizations == 0)
        throw ConfigError("IDS estimate needs at least one realization");
    const double reach = 2.0 * d + spec.coupling * std::max(std::abs(spec.v_min), std::abs(spec.v_max));
    for (double E : energies)
        if (!(E >= -reach && E <= reach))
            throw ConfigError("IDS grid point outside the admissible spectral range");

    const BoxGeometry box = BoxGeometry::cube(d, 0, side);
    const double sites = static_cast<double>(box.size());
    const auto per_realization = parallel_map(n_realizations, workers, [&](std::size_t r) {
        const FiniteHamiltonian H = build_hamiltonian(box, spec, SeedPath{master_seed, r, 0});
        std::vector<double> fractions(energies.size());
        if (box.size() <= kDenseEigenLimit) {
            const auto values = sorted_eigenvalues(H);
            for (std::size_t k = 0; k < energies.size(); ++k) {
                const auto below = std::lower_bound(values.begin(), values.end(), energies[k]) - values.begin();
                fractions[k] = static_cast<double>(below) / sites;
            }
        } else {
            for (std::size_t k = 0; k < energies.size(); ++k)
                fractions[k] = static_cast<double>(count_below(H, energies[k])) / sites;
        }
        return fractions;
    });

    IdsTable table;
    table.energies.assign(energies.begin(), energies.end());
    table.box_size = box.size();
    table.n_realizations = n_realizations;
    std::vector<double> column(n_realizations);
    for (std::size_t k = 0; k < energies.size(); ++k) {
        for (std::size_t r = 0; r < n_realizations; ++r)
            column[r] = per_realization[r][k];
        const MeanEstimate m = estimate_mean(column);
        table.nu_hat.push_back(m.mean);
        table.std_errors.push_back(m.stderr_mean);
    }
    return table;
}

PooledSpectrum::PooledSpectrum(std::vector<double> eigenvalues, double total_sites, std::size_t n_realizations)
    : eigenvalues_(std::move(eigenvalues)), total_sites_(total_sites), n_realizations_(n_realizations)
{
    if (!(total_sites_ > 0.0))
        throw ConfigError("pooled spectrum needs a positive site count");
    std::sort(eigenvalues_.begin(), eigenvalues_.end());
}

std::size_t PooledSpectrum::count(double lo, double hi) const
{
    if (!(hi > lo))
        return 0;
    const auto first = std::lower_bound(eigenvalues_.begin(), eigenvalues_.end(), lo);
    const auto last = std::lower_bound(eigenvalues_.begin(), eigenvalues_.end(), hi);
    return static_cast<std::size_t>(last - first);
}

double PooledSpectrum::measure(double lo, double hi) const
{
    return static_cast<double>(count(lo, hi)) / total_sites_;
}

double PooledSpectrum::measure_error(double lo, double hi) const
{
    return std::sqrt(static_cast<double>(count(lo, hi))) / total_sites_;
}

double PooledSpectrum::resolution() const
{
    if (eigenvalues_.size() < 2)
        return std::numeric_limits<double>::infinity();
    return (eigenvalues_.back() - eigenvalues_.front()) / static_cast<double>(eigenvalues_.size());
}

PooledSpectrum sample_pooled_spectrum(const DisorderSpec& spec, int d, long side, std::size_t n_realizations,
                                      std::uint64_t master_seed, int workers)
{
    spec.validate();
    if (n_realizations == 0)
        throw ConfigError("pooled spectrum needs at least one realization");
    const BoxGeometry box = BoxGeometry::cube(d, 0, side);
    const auto spectra = parallel_map(n_realizations, workers, [&](std::size_t r) {
        return sorted_eigenvalues(build_hamiltonian(box, spec, SeedPath{master_seed, r, 0}));
    });
    std::vector<double> pooled;
    pooled.reserve(n_realizations * static_cast<std::size_t>(box.size()));
    for (const auto& values : spectra)
        pooled.insert(pooled.end(), values.begin(), values.end());
    return PooledSpectrum(std::move(pooled), static_cast<double>(box.size()) * static_cast<double>(n_realizations),
                          n_realizations);
}

TabulatedIds::TabulatedIds(IdsTable table) : table_(std::move(table))
{
    if (table_.energies.size() < 2 || table_.energies.size() != table_.nu_hat.size())
        throw ConfigError("tabulated IDS needs at least two grid points");
    if (!std::is_sorted(table_.energies.begin(), table_.energies.end()))
        throw ConfigError("tabulated IDS grid must be ascending");
}

double TabulatedIds::nu(double E) const
{
    const auto& x = table_.energies;
    const auto& y = table_.nu_hat;
    if (E <= x.front())
        return y.front();
    if (E >= x.back())
        return y.back();
    const auto upper = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), E) - x.begin());
    const std::size_t lower = upper - 1;
    const double t = (E - x[lower]) / (x[upper] - x[lower]);
    return y[lower] + t * (y[upper] - y[lower]);
}

double TabulatedIds::measure(double lo, double hi) const
{
    return hi > lo ? nu(hi) - nu(lo) : 0.0;
}

double TabulatedIds::resolution() const
{
    double step = 0.0;
    for (std::size_t k = 1; k < table_.energies.size(); ++k)
        step = std::max(step, table_.energies[k] - table_.energies[k - 1]);
    return step;
}

SingleSiteEstimate single_site_measure(const DisorderSpec& spec, int d, long side, double lo, double hi,
                                       std::size_t n_realizations, std::uint64_t master_seed, int workers)
{
    const BoxGeometry box = BoxGeometry::cube(d, 0, side);
    const Site centre{side / 2, d > 1 ? side / 2 : 0, d > 2 ? side / 2 : 0};
    const Eigen::Index c = box.index(centre);
    const auto values = parallel_map(n_realizations, workers, [&](std::size_t r) {
        const FiniteHamiltonian H = build_hamiltonian(box, spec, SeedPath{master_seed, r, 0});
        const SpectralData S = window_spectrum(H, lo, hi);
        const Eigen::Index sites[] = {c};
        return local_weight(S, lo, hi, sites);
    });
    const MeanEstimate m = estimate_mean(values);
    return {m.mean, m.stderr_mean};
}

FracDerivEstimate fractional_derivative(const IdsSource& source, double lambda, double alpha,
                                        std::span<const double> epsilons)
{
    if (epsilons.empty())
        throw ConfigError("fractional derivative needs at least one epsilon");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("alpha must lie in (0, 1]");
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        if (!(epsilons[k] > 0.0) || (k > 0 && !(epsilons[k] < epsilons[k - 1])))
            throw ConfigError("epsilons must be positive and strictly decreasing");
        if (!(epsilons[k] > source.resolution()))
            throw PrecisionError("epsilon " + std::to_string(epsilons[k]) + " is below the IDS resolution " +
                                 std::to_string(source.resolution()));
    }

    FracDerivEstimate e;
    e.lambda = lambda;
    e.alpha = alpha;
    e.epsilons.assign(epsilons.begin(), epsilons.end());
    for (double eps : epsilons)
        e.ratios.push_back(source.measure(lambda - eps, lambda + eps) / std::pow(2.0 * eps, alpha));

    const std::size_t n = e.ratios.size();
    const std::size_t tail = std::min(n, std::max<std::size_t>(3, n / 2));
    e.D_alpha = *std::max_element(e.ratios.end() - static_cast<std::ptrdiff_t>(tail), e.ratios.end());

    const bool all_positive = std::all_of(e.ratios.begin(), e.ratios.end(), [](double r) { return r > 0.0; });
    if (n >= 2 && all_positive) {
        std::vector<double> x, y;
        for (std::size_t k = 0; k < n; ++k) {
            x.push_back(std::log(e.epsilons[k]));
            y.push_back(std::log(e.ratios[k]));
        }
        if (fit_line(x, y).slope < -0.5 * alpha)
            e.finite = false;
    }
    if (!e.finite) {
        e.D_alpha = std::numeric_limits<double>::infinity();
        return e;
    }
    if (n >= 3) {
        const auto last = e.ratios.end();
        const double lo = *std::min_element(last - 3, last);
        const double hi = *std::max_element(last - 3, last);
        if (lo > 0.0 && hi <= 1.1 * lo) {
            e.stabilized = true;
            e.d_alpha = (e.ratios[n - 1] + e.ratios[n - 2] + e.ratios[n - 3]) / 3.0;
        }
    }
    return e;
}

MeasureScan scaled_measure_scan(const IdsSource& source, double lambda, double c, double alpha, int d,
                                std::span<const long> L_list)
{
    if (!(c > 0.0))
        throw ConfigError("scan window needs c > 0 (I = [-c, c])");
    MeasureScan scan;
    for (long L : L_list) {
        const double beta = scaling_beta(L, d, alpha);
        const double half_width = c / beta;
        if (!(half_width > source.resolution())) {
            scan.truncated = true;
            scan.warning = "scan truncated at L = " + std::to_string(L) +
                           ": window below the IDS resolution";
            break;
        }
        const double volume = std::pow(static_cast<double>(L), d);
        scan.points.push_back({L, beta, volume * source.measure(lambda - half_width, lambda + half_width), false});
    }
    double suffix_max = -std::numeric_limits<double>::infinity();
    for (auto it = scan.points.rbegin(); it != scan.points.rend(); ++it) {
        if (it->value >= suffix_max) {
            it->selected = true;
            suffix_max = it->value;
        }
    }
    return scan;
}

void write_ids_csv(std::ostream& out, const IdsTable& table)
{
    out << "E,nu_hat,stderr\n";
    out.precision(17);
    for (std::size_t k = 0; k < table.energies.size(); ++k)
        out << table.energies[k] << ',' << table.nu_hat[k] << ',' << table.std_errors[k] << '\n';
}

void write_scan_csv(std::ostream& out, const MeasureScan& scan)
{
    out << "L,scaled_value\n";
    out.precision(17);
    for (const auto& p : scan.points)
        out << p.L << ',' << p.value << '\n';
}

void to_json(nlohmann::json& j, const FracDerivEstimate& e)
{
    j = nlohmann::json{{"lambda", e.lambda},     {"alpha", e.alpha},   {"epsilons", e.epsilons},
                       {"ratios", e.ratios},     {"stabilized", e.stabilized}, {"finite", e.finite},
                       {"D_alpha", e.finite ? nlohmann::json(e.D_alpha) : nlohmann::json("inf")}};
    j["d_alpha"] = e.d_alpha ? nlohmann::json(*e.d_alpha) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const MeasureScan& scan)
{
    j = nlohmann::json::object();
    j["points"] = nlohmann::json::array();
    for (const auto& p : scan.points)
        j["points"].push_back({{"L", p.L}, {"beta", p.beta}, {"value", p.value}, {"selected", p.selected}});
    j["truncated"] = scan.truncated;
    j["warning"] = scan.warning;
    j["subsequence_note"] = "running-limsup selection is a heuristic stand-in for a nonconstructive subsequence";
}

} // namespace anderson
