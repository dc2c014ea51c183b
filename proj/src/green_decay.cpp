#include "anderson/green_decay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "anderson/errors.hpp"
#include "anderson/parallel.hpp"
#include "anderson/spectral.hpp"
#include "anderson/statistics.hpp"

namespace anderson {

std::vector<SitePair> axis_pairs(const BoxGeometry& geom, std::span<const long> distances)
{
    Site centre{0, 0, 0};
    for (int axis = 0; axis < geom.dim(); ++axis)
        centre[axis] = geom.lows()[axis] + geom.extent(axis) / 2;
    const Eigen::Index n = geom.index(centre);
    std::vector<SitePair> pairs;
    for (long r : distances) {
        Site other = centre;
        other[0] += r;
        if (geom.contains(other))
            pairs.push_back({n, geom.index(other), std::abs(r)});
    }
    return pairs;
}

DecayEstimate estimate_fractional_moments(const DisorderSpec& spec, const BoxGeometry& geom, double s,
                                          std::complex<double> z, std::span<const SitePair> pairs,
                                          std::size_t n_realizations, std::uint64_t master_seed, int workers)
{
    if (!(s > 0.0 && s < 1.0))
        throw ConfigError("fractional exponent s must lie in (0, 1)");
    if (!(z.imag() > 0.0))
        throw ConfigError("probe energy needs Im z > 0");
    if (n_realizations < 100)
        throw ConfigError("fractional moments need at least 100 realizations");
    std::set<long> distinct;
    for (const auto& p : pairs)
        distinct.insert(p.distance);
    if (distinct.size() < 4)
        throw ConfigError("decay fit needs at least 4 distinct distances");

    const std::vector<long> distances(distinct.begin(), distinct.end());
    std::map<long, std::size_t> slot;
    for (std::size_t i = 0; i < distances.size(); ++i)
        slot[distances[i]] = i;
    std::vector<std::size_t> pairs_per_distance(distances.size(), 0);
    for (const auto& p : pairs)
        ++pairs_per_distance[slot[p.distance]];

    GreenQuery query{z, {}};
    for (const auto& p : pairs)
        query.pairs.emplace_back(p.n, p.m);

    // Per realization: distance-averaged |G|^s (one sample per distance).
    const auto samples = parallel_map(n_realizations, workers, [&](std::size_t r) {
        const FiniteHamiltonian H = build_hamiltonian(geom, spec, SeedPath{master_seed, r, 0});
        const GreenEntries G = green(H, query);
        std::vector<double> per_distance(distances.size(), 0.0);
        for (const auto& p : pairs) {
            const double value = std::pow(std::abs(G.at({p.n, p.m})), s);
            const std::size_t k = slot.at(p.distance);
            per_distance[k] += value / static_cast<double>(pairs_per_distance[k]);
        }
        return per_distance;
    });

    DecayEstimate e;
    e.s = s;
    e.z = z;
    e.n_realizations = n_realizations;
    e.distances = distances;
    std::vector<double> column(n_realizations);
    std::vector<double> x, y;
    for (std::size_t k = 0; k < distances.size(); ++k) {
        for (std::size_t r = 0; r < n_realizations; ++r) {
            column[r] = samples[r][k];
            e.max_sample = std::max(e.max_sample, column[r]);
        }
        const MeanEstimate m = estimate_mean(column);
        e.means.push_back(m.mean);
        e.std_errors.push_back(m.stderr_mean);
        e.log_means.push_back(std::log(m.mean));
        e.log_std_errors.push_back(m.mean > 0.0 ? m.stderr_mean / m.mean : 0.0);
        x.push_back(static_cast<double>(distances[k]));
        y.push_back(e.log_means.back());
    }
    const LineFit fit = fit_line(x, y);
    e.log_c = fit.intercept;
    e.rate = -fit.slope;
    e.r_squared = fit.r_squared;
    e.residuals = fit.residuals;
    return e;
}

double margin_threshold(double r, double s, int d, double alpha, double a)
{
    if (!(r > 0.0))
        throw DomainError("margin threshold needs a positive decay rate");
    if (!(s > 0.0 && s < 1.0) || !(alpha > 0.0 && alpha <= 1.0) || !(a > 0.0 && a < 1.0) || d < 1)
        throw DomainError("margin threshold arguments out of range");
    return ((1.0 - s) * d / alpha + d + (d - 1) * a) / r;
}

void to_json(nlohmann::json& j, const DecayEstimate& e)
{
    j = nlohmann::json{{"s", e.s},
                       {"z", {e.z.real(), e.z.imag()}},
                       {"n_realizations", e.n_realizations},
                       {"distances", e.distances},
                       {"means", e.means},
                       {"std_errors", e.std_errors},
                       {"log_means", e.log_means},
                       {"log_std_errors", e.log_std_errors},
                       {"fit", {{"log_c", e.log_c}, {"rate", e.rate}, {"r_squared", e.r_squared}}},
                       {"residuals", e.residuals},
                       {"max_sample", e.max_sample}};
}

void write_decay_csv(std::ostream& out, const DecayEstimate& e)
{
    out << "distance,log_mean,stderr\n";
    out.precision(17);
    for (std::size_t k = 0; k < e.distances.size(); ++k)
        out << e.distances[k] << ',' << e.log_means[k] << ',' << e.log_std_errors[k] << '\n';
}

} // namespace anderson
