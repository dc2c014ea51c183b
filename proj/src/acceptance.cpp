#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <functional>
#include <iomanip>
#include <sstream>

#include "anderson/errors.hpp"
#include "anderson/experiment.hpp"
#include "anderson/green_decay.hpp"
#include "anderson/ids.hpp"
#include "anderson/spectral.hpp"

namespace anderson {

namespace {

using nlohmann::json;

std::string fmt(double v, int digits = 3)
{
    std::ostringstream o;
    o << std::setprecision(digits) << v;
    return o.str();
}

// Perturbation identity, trace formula and spectral representation of the
// resolvent on random boxes.
CriterionResult exact_identities(const ExperimentConfig& c)
{
    CriterionResult out{1, "exact identities", false, "", 0.0, {}};
    const std::uint64_t seed = stage_seed(seed_for(c, Stage::Verify), 1);
    std::mt19937_64 rng(seed);
    const DisorderSpec spec = uniform_disorder(-0.5, 0.5, 8.0);
    double worst_perturbation = 0.0, worst_trace = 0.0, worst_green = 0.0;

    for (int trial = 0; trial < 100; ++trial) {
        const int d = trial % 2 == 0 ? 1 : 2;
        const long side = d == 1 ? std::uniform_int_distribution<long>(40, 400)(rng)
                                 : std::uniform_int_distribution<long>(10, 20)(rng);
        const BoxGeometry host = BoxGeometry::cube(d, 0, side);
        const FiniteHamiltonian H = build_hamiltonian(host, spec, SeedPath{seed, static_cast<std::uint64_t>(trial), 0});

        // Cell strictly inside the host, site at distance > margin from its boundary.
        const long margin = std::uniform_int_distribution<long>(1, 3)(rng);
        const long cell_side = std::uniform_int_distribution<long>(2 * margin + 3, side - 2)(rng);
        std::vector<long> lows(d), highs(d);
        Site n{0, 0, 0};
        for (int axis = 0; axis < d; ++axis) {
            lows[axis] = std::uniform_int_distribution<long>(1, side - 1 - cell_side)(rng);
            highs[axis] = lows[axis] + cell_side;
            n[axis] = std::uniform_int_distribution<long>(lows[axis] + margin + 1, highs[axis] - margin - 2)(rng);
        }
        const FiniteHamiltonian cell = restrict_to(H, BoxGeometry(lows, highs));
        const std::complex<double> z(std::uniform_real_distribution<double>(-4.0, 4.0)(rng),
                                     std::uniform_real_distribution<double>(0.05, 1.0)(rng));
        const PerturbationTerms terms = perturbation_identity(H, cell, z, n, margin);
        worst_perturbation = std::max(worst_perturbation, terms.residual());

        // Tr(M_g f(H)) with f(x) = x^2 computed from the matrix against the
        // eigen-expansion.
        const SpectralData S = eigensolve(H, true);
        Eigen::VectorXd g(H.size());
        for (Eigen::Index i = 0; i < g.size(); ++i)
            g[i] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const Eigen::SparseMatrix<double> H2 = H.matrix * H.matrix;
        double direct = 0.0;
        for (Eigen::Index i = 0; i < H.size(); ++i)
            direct += g[i] * H2.coeff(i, i);
        const Eigen::VectorXd f = S.eigenvalues.array().square();
        const double expansion = (S.eigenvectors.array().square().matrix().transpose() * g).dot(f);
        worst_trace = std::max(worst_trace, std::abs(direct - expansion));

        // G(z; a, b) against sum_j psi_j(a) psi_j(b) / (E_j - z).
        const Eigen::Index a = host.index(n);
        const Eigen::Index b = std::uniform_int_distribution<Eigen::Index>(0, H.size() - 1)(rng);
        const GreenEntries entries = green(H, GreenQuery{z, {{a, b}}});
        std::complex<double> spectral = 0.0;
        for (Eigen::Index j = 0; j < S.size(); ++j)
            spectral += S.eigenvectors(a, j) * S.eigenvectors(b, j) / (S.eigenvalues[j] - z);
        worst_green = std::max(worst_green, std::abs(entries.at({a, b}) - spectral));
    }
    out.pass = worst_perturbation <= 1e-9 && worst_trace <= 1e-9 && worst_green <= 1e-9;
    out.detail = "max residuals: perturbation " + fmt(worst_perturbation) + ", trace " + fmt(worst_trace) +
                 ", green " + fmt(worst_green) + " over 100 boxes (tol 1e-9)";
    out.data = {{"perturbation", worst_perturbation}, {"trace", worst_trace}, {"green", worst_green}};
    return out;
}

CriterionResult wegner_minami(const ExperimentConfig& c, int workers)
{
    CriterionResult out{2, "Wegner and Minami bounds", true, "", 0.0, json::array()};
    const std::uint64_t seed = stage_seed(seed_for(c, Stage::Verify), 2);
    const std::vector<std::pair<std::string, DisorderSpec>> laws{{"uniform g=8", uniform_disorder(-0.5, 0.5, 8.0)},
                                                                 {"alpha-power 0.5 g=1", alpha_power_disorder(0.5, 1.0)}};
    int checks = 0, failures = 0;
    double worst_ratio = 0.0;
    for (const auto& [name, spec] : laws) {
        for (long side : {50L, 200L}) {
            const BoxGeometry box = BoxGeometry::cube(1, 0, side);
            for (double width : {0.04, 0.2, 1.0}) {
                const double lo = c.lambda - width / 2, hi = c.lambda + width / 2;
                const InequalityReport w = wegner_check(spec, box, lo, hi, 2000, seed, workers);
                const InequalityReport m = minami_check(spec, box, lo, hi, 2000, seed, workers);
                for (const auto* r : {&w, &m}) {
                    ++checks;
                    if (!r->pass)
                        ++failures;
                    if (r->bound > 0)
                        worst_ratio = std::max(worst_ratio, r->mean / r->bound);
                    json row = *r;
                    row["law"] = name;
                    row["side"] = side;
                    row["width"] = width;
                    out.data.push_back(row);
                }
            }
        }
    }
    out.pass = failures == 0;
    out.detail = std::to_string(checks - failures) + "/" + std::to_string(checks) +
                 " checks within 3 sigma, largest mean/bound " + fmt(worst_ratio);
    return out;
}

CriterionResult decay_witness(const ExperimentConfig& c, int workers)
{
    CriterionResult out{3, "fractional-moment decay", false, "", 0.0, {}};
    const BoxGeometry geom = BoxGeometry::cube(c.dimension, 0, c.decay.box_side);
    std::vector<long> distances;
    for (long r = c.decay.distance_min; r <= c.decay.distance_max; ++r)
        distances.push_back(r);
    const DecayEstimate e =
        estimate_fractional_moments(c.disorder, geom, c.decay.s, {c.lambda, c.decay.imag_z}, axis_pairs(geom, distances),
                                    c.decay.n_realizations, seed_for(c, Stage::Decay), workers);
    out.pass = e.rate > 0.0 && e.r_squared > c.thresholds.r_squared_min;
    out.detail = "rate " + fmt(e.rate) + ", R^2 " + fmt(e.r_squared, 4) + " (need > 0 and > " +
                 fmt(c.thresholds.r_squared_min) + ")";
    out.data = e;
    return out;
}

CriterionResult free_ids(int workers)
{
    CriterionResult out{4, "free-Laplacian IDS", false, "", 0.0, {}};
    std::vector<double> grid;
    for (int k = -190; k <= 190; ++k)
        grid.push_back(k / 100.0);
    const IdsTable table = estimate_ids(uniform_disorder(-0.5, 0.5, 0.0), 1, 1000, grid, 1, 0, workers);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        worst = std::max(worst, std::abs(table.nu_hat[k] - std::acos(-grid[k] / 2) / std::numbers::pi));
    out.pass = worst <= 0.02;
    out.detail = "sup error " + fmt(worst) + " on [-1.9, 1.9] (tol 0.02)";
    out.data = {{"sup_error", worst}};
    return out;
}

struct PoissonRun {
    PoissonFitReport fit;
    CountDistribution dist;
};

PoissonRun poisson_run(const ExperimentConfig& c, std::optional<IntensityEstimate> intensity, int workers)
{
    const auto eta = eta_L_samples(c, c.poisson_L, c.poisson_realizations, workers);
    PoissonRun run;
    run.dist = intensity ? CountDistribution::from_samples(eta, intensity->target, intensity->target_error)
                         : CountDistribution::from_samples(eta);
    run.fit = poisson_fit(run.dist, c.thresholds.poisson);
    return run;
}

CriterionResult poisson_limit(const ExperimentConfig& c, int workers)
{
    CriterionResult out{5, "Poisson shape and intensity", false, "", 0.0, {}};
    const IntensityEstimate intensity = estimate_intensity(c, workers);
    const PoissonRun run = poisson_run(c, intensity, workers);
    const auto& f = run.fit;
    out.pass = f.verdict == Verdict::Pass;
    out.detail = "n " + std::to_string(f.n) + ", mean " + fmt(f.mean) + " vs target " + fmt(intensity.target) +
                 ", TV " + fmt(f.tv_distance) + ", var/mean " + fmt(f.dispersion) + ", verdict " + to_string(f.verdict);
    out.data = {{"fit", f}, {"distribution", run.dist}, {"D_hat", intensity.D}, {"target", intensity.target}};
    return out;
}

CriterionResult gap_criterion(const ExperimentConfig& c, int workers)
{
    CriterionResult out{6, "xi/eta gap trend", false, "", 0.0, {}};
    std::vector<GapLevel> levels;
    for (long L : c.L_list) {
        const GapEstimate g = xi_eta_gap(c.disorder, c.window(L), partition_for(c, L), c.n_realizations,
                                         seed_for(c, Stage::Sweep), workers, c.padding);
        levels.push_back({L, g});
    }
    const GapTrend t = gap_trend(levels, c.thresholds.gap_sigmas);
    out.pass = t.decreasing;
    std::ostringstream o;
    for (const auto& l : t.levels)
        o << "L=" << l.L << ": " << fmt(l.gap.mean) << "+-" << fmt(l.gap.std_error, 2) << "  ";
    out.detail = o.str() + (t.decreasing ? "strictly decreasing" : "not decreasing beyond error bars");
    out.data = t;
    return out;
}

CriterionResult remainder_criterion(const ExperimentConfig& c, int workers)
{
    CriterionResult out{7, "remainder scaling", false, "", 0.0, {}};
    std::vector<RemainderInput> inputs;
    for (long L : c.L_list)
        inputs.push_back(remainder_input(c, L, c.remainder_realizations, workers));
    const RemainderAudit a = remainder_audit(inputs, c.dimension, c.a_exponent, c.thresholds.remainder_tolerance);
    out.pass = a.pass;
    std::ostringstream o;
    for (const auto& l : a.levels)
        o << "L=" << l.L << ": " << fmt(l.audit) << "  ";
    out.detail = o.str() + "slope " + fmt(a.slope) + " vs predicted " + fmt(a.predicted_slope) + " (tol " +
                 fmt(100 * a.tolerance) + "%)";
    out.data = a;
    return out;
}

CriterionResult negative_control(const ExperimentConfig& c, int workers)
{
    CriterionResult out{8, "zero-coupling negative control", false, "", 0.0, {}};
    ExperimentConfig free = c;
    free.disorder.coupling = 0.0;
    const PoissonRun run = poisson_run(free, std::nullopt, workers);
    out.pass = !run.fit.shape_pass;
    out.detail = "shape test " + std::string(run.fit.shape_pass ? "passed" : "failed") + " as " +
                 (out.pass ? "required" : "NOT required") + " (mean " + fmt(run.fit.mean) + ", var/mean " +
                 fmt(run.fit.dispersion) + ", verdict " + to_string(run.fit.verdict) + ")";
    out.data = {{"fit", run.fit}};
    return out;
}

CriterionResult determinism(const ExperimentConfig& c)
{
    CriterionResult out{9, "determinism across workers", false, "", 0.0, {}};
    const long L = c.L_list.front();
    const std::size_t n = 200;
    const std::string reference = sample_stream(c, L, n, 1);
    bool same = sample_stream(c, L, n, 1) == reference;
    for (int workers : {4, 8})
        same = same && sample_stream(c, L, n, workers) == reference;
    out.pass = same && !reference.empty();
    out.detail = std::string(same ? "identical" : "DIFFERENT") + " streams (" + std::to_string(reference.size()) +
                 " bytes, L=" + std::to_string(L) + ", " + std::to_string(n) + " realizations) at workers 1, 1, 4, 8";
    out.data = {{"bytes", reference.size()}};
    return out;
}

} // namespace

std::vector<CriterionResult> verify_suite(const ExperimentConfig& c, int workers, const std::vector<int>& only)
{
    c.validate();
    auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    std::vector<std::pair<int, std::function<CriterionResult()>>> checks{
        {1, [&] { return exact_identities(c); }},
        {2, [&] { return wegner_minami(c, workers); }},
        {3, [&] { return decay_witness(c, workers); }},
        {4, [&] { return free_ids(workers); }},
        {5, [&] { return poisson_limit(c, workers); }},
        {6, [&] { return gap_criterion(c, workers); }},
        {7, [&] { return remainder_criterion(c, workers); }},
        {8, [&] { return negative_control(c, workers); }},
        {9, [&] { return determinism(c); }},
    };
    std::vector<CriterionResult> results;
    for (auto& [id, run] : checks) {
        if (!wanted(id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = run();
        } catch (const std::exception& e) {
            r.id = id;
            r.name = "criterion " + std::to_string(id);
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace anderson
