#include "anderson/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "anderson/errors.hpp"
#include "anderson/ids.hpp"
#include "anderson/kernels.hpp"
#include "anderson/parallel.hpp"
#include "anderson/spectral.hpp"
#include "anderson/statistics.hpp"

namespace anderson {

std::string to_string(MeasureKind kind)
{
    switch (kind) {
    case MeasureKind::Xi:
        return "Xi";
    case MeasureKind::EtaP:
        return "EtaP";
    case MeasureKind::EtaTildeP:
        return "EtaTildeP";
    case MeasureKind::EtaL:
        return "EtaL";
    }
    return "?";
}

double WindowSpec::beta() const
{
    return scaling_beta(L, dim(), alpha);
}

double WindowSpec::energy_lo() const
{
    return lambda - c / beta();
}

double WindowSpec::energy_hi() const
{
    return lambda + c / beta();
}

void WindowSpec::validate() const
{
    Q.validate();
    if (!(c > 0.0))
        throw ConfigError("window needs I = [-c, c] with c > 0");
    if (L < 2)
        throw ConfigError("window scale L must be >= 2");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("window alpha must lie in (0, 1]");
}

namespace {

std::optional<BoxGeometry> intersect(const BoxGeometry& a, const BoxGeometry& b)
{
    std::vector<long> lows(a.dim()), highs(a.dim());
    for (int j = 0; j < a.dim(); ++j) {
        lows[j] = std::max(a.lows()[j], b.lows()[j]);
        highs[j] = std::min(a.highs()[j], b.highs()[j]);
        if (highs[j] <= lows[j])
            return std::nullopt;
    }
    return BoxGeometry(std::move(lows), std::move(highs));
}

// Linear indices in `box` of the sites of `region` (region inside box).
std::vector<Eigen::Index> indices_of(const BoxGeometry& box, const BoxGeometry& region)
{
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(region.size()));
    for (Eigen::Index i = 0; i < region.size(); ++i)
        out.push_back(box.index(region.site(i)));
    return out;
}

// Window weight of H restricted to the sites of `region`.
double region_weight(const FiniteHamiltonian& H, const WindowSpec& w, const BoxGeometry& region)
{
    const auto sub = intersect(H.geometry, region);
    if (!sub)
        return 0.0;
    const double lo = w.energy_lo();
    const double hi = w.energy_hi();
    if (count_in_window(H, lo, hi) == 0)
        return 0.0;
    const SpectralData S = window_spectrum(H, lo, hi);
    return local_weight(S, lo, hi, indices_of(H.geometry, *sub));
}

} // namespace

BoxGeometry host_box(const WindowSpec& w, long padding)
{
    if (padding < 0)
        throw ConfigError("padding must be non-negative");
    const BoxGeometry region = scaled_region(w.L, w.Q);
    std::vector<long> lows = region.lows(), highs = region.highs();
    for (int j = 0; j < region.dim(); ++j) {
        lows[j] -= padding;
        highs[j] += padding;
    }
    return BoxGeometry(std::move(lows), std::move(highs));
}

CountSample xi_count(const FiniteHamiltonian& host, const WindowSpec& w)
{
    w.validate();
    const BoxGeometry region = scaled_region(w.L, w.Q);
    if (!host.geometry.contains(region))
        throw DomainError("LQ is not inside the host box");
    return {MeasureKind::Xi, region_weight(host, w, region), host.seed.realization_index, w};
}

CountSample eta_p_count(const BoxGeometry& cell, const DisorderSpec& spec, const SeedPath& seed,
                        const WindowSpec& w)
{
    w.validate();
    const BoxGeometry region = scaled_region(w.L, w.Q);
    CountSample sample{MeasureKind::EtaP, 0.0, seed.realization_index, w};
    if (!intersect(cell, region))
        return sample;
    sample.value = region_weight(build_hamiltonian(cell, spec, seed), w, region);
    return sample;
}

CountSample eta_tilde_count(const BoxPartition& partition, std::size_t cell, const DisorderSpec& spec,
                            const SeedPath& seed, const WindowSpec& w)
{
    w.validate();
    if (cell >= partition.cells.size())
        throw DomainError("cell index outside the partition");
    CountSample sample{MeasureKind::EtaTildeP, 0.0, seed.realization_index, w};
    if (!w.Q.contains(partition.anchor(cell)))
        return sample;
    const FiniteHamiltonian H = build_hamiltonian(partition.cells[cell], spec, seed);
    sample.value = static_cast<double>(count_in_window(H, w.energy_lo(), w.energy_hi()));
    return sample;
}

CountSample eta_L_count(const BoxPartition& partition, const DisorderSpec& spec, const SeedPath& seed,
                        const WindowSpec& w)
{
    CountSample total{MeasureKind::EtaL, 0.0, seed.realization_index, w};
    for (std::size_t i = 0; i < partition.cells.size(); ++i)
        total.value += eta_tilde_count(partition, i, spec, seed, w).value;
    return total;
}

PerturbationTerms perturbation_identity(const FiniteHamiltonian& H_global, const FiniteHamiltonian& H_cell,
                                        std::complex<double> z, const Site& n, long margin)
{
    const BoxGeometry& host = H_global.geometry;
    const BoxGeometry& cell = H_cell.geometry;
    if (!host.contains(cell))
        throw DomainError("cell is not inside the host box");
    for (Eigen::Index i = 0; i < cell.size(); ++i)
        if (H_cell.potential[i] != H_global.potential[host.index(cell.site(i))])
            throw DomainError("cell Hamiltonian is not the restriction of the host Hamiltonian");
    if (!cell.contains(n) || distance_to_boundary(cell, n) <= margin)
        throw DomainError("site is not in the interior of the cell");

    const Eigen::VectorXcd G_col = green_column(H_global, z, host.index(n));
    const Eigen::VectorXcd GB_col = green_column(H_cell, z, cell.index(n));

    PerturbationTerms terms;
    terms.lhs = G_col[host.index(n)] - GB_col[cell.index(n)];
    terms.rhs = 0.0;
    for (const auto& [m, k] : boundary_layers(cell, std::max(margin, 1L)).boundary_pairs) {
        if (!host.contains(k))
            continue;
        terms.rhs -= G_col[host.index(k)] * GB_col[cell.index(m)];
    }
    return terms;
}

namespace {

// Window count of a chain cell straight from its potential values.
long chain_cell_count(const BoxGeometry& cell, const DisorderSpec& spec, const SeedPath& seed, double lo, double hi)
{
    const SeedPath first{seed.master_seed, seed.realization_index, cell.site_key(cell.site(0))};
    const Eigen::VectorXd v = sample_potential(spec, first, cell.size());
    const Eigen::VectorXd off = Eigen::VectorXd::Ones(cell.size() - 1);
    return static_cast<long>(sturm_count_below(v, off, hi) - sturm_count_below(v, off, lo));
}

} // namespace

RealizationRecord simulate_realization(const DisorderSpec& spec, const WindowSpec& w, const BoxPartition& partition,
                                       std::uint64_t master_seed, std::size_t realization,
                                       const RealizationOptions& options)
{
    const SeedPath seed{master_seed, realization, 0};
    const double lo = w.energy_lo();
    const double hi = w.energy_hi();
    const BoxGeometry region = scaled_region(w.L, w.Q);

    RealizationRecord record;
    record.realization = realization;
    std::optional<FiniteHamiltonian> host;
    if (options.with_xi) {
        const long padding = options.padding < 0 ? 2 * partition.sub_scale : options.padding;
        host = build_hamiltonian(host_box(w, padding), spec, seed);
        record.xi = xi_count(*host, w).value;
    }
    record.cell_counts.reserve(partition.cells.size());
    for (std::size_t i = 0; i < partition.cells.size(); ++i) {
        const BoxGeometry& cell = partition.cells[i];
        const bool from_host = host && host->geometry.contains(cell);
        long count = 0;
        if (!from_host && cell.dim() == 1 && cell.size() > 1) {
            count = chain_cell_count(cell, spec, seed, lo, hi);
        } else {
            const FiniteHamiltonian H = from_host ? restrict_to(*host, cell) : build_hamiltonian(cell, spec, seed);
            count = static_cast<long>(count_in_window(H, lo, hi));
        }
        record.cell_counts.push_back(count);
        if (w.Q.contains(partition.anchor(i)))
            record.eta_L += count;
        if (options.with_eta_p && count > 0) {
            const FiniteHamiltonian H = from_host ? restrict_to(*host, cell) : build_hamiltonian(cell, spec, seed);
            record.eta_p_sum += region_weight(H, w, region);
        }
    }
    return record;
}

GapEstimate xi_eta_gap(const DisorderSpec& spec, const WindowSpec& w, const BoxPartition& partition,
                       std::size_t n_realizations, std::uint64_t master_seed, int workers, long padding)
{
    if (n_realizations == 0)
        throw ConfigError("xi/eta gap needs at least one realization");
    w.validate();
    RealizationOptions options;
    options.with_eta_p = false;
    options.padding = padding;
    const auto gaps = parallel_map(n_realizations, workers, [&](std::size_t r) {
        return simulate_realization(spec, w, partition, master_seed, r, options).gap();
    });
    const MeanEstimate m = estimate_mean(gaps);
    return {m.mean, m.stderr_mean, m.n};
}

void to_json(nlohmann::json& j, const WindowSpec& w)
{
    j = nlohmann::json{{"lambda", w.lambda}, {"c", w.c}, {"Q", w.Q}, {"L", w.L}, {"alpha", w.alpha}, {"beta_L", w.beta()}};
}

void from_json(const nlohmann::json& j, WindowSpec& w)
{
    w.lambda = j.at("lambda").get<double>();
    w.c = j.at("c").get<double>();
    w.Q = j.at("Q").get<Rectangle>();
    w.L = j.at("L").get<long>();
    w.alpha = j.value("alpha", 1.0);
    w.validate();
}

nlohmann::json sample_record(const CountSample& s)
{
    return nlohmann::json{{"kind", to_string(s.kind)},   {"realization", s.realization}, {"L", s.window.L},
                          {"lambda", s.window.lambda},   {"c", s.window.c},             {"Q", s.window.Q},
                          {"value", s.value}};
}

} // namespace anderson
