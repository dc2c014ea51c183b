#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "anderson/errors.hpp"
#include "anderson/point_process.hpp"
#include "anderson/spectral.hpp"

using namespace anderson;

namespace {

const DisorderSpec kSpec = uniform_disorder(-0.5, 0.5, 8.0);

WindowSpec window(long L, double c, Rectangle Q = unit_cube(1), double lambda = 0.0)
{
    WindowSpec w;
    w.L = L;
    w.c = c;
    w.Q = std::move(Q);
    w.lambda = lambda;
    return w;
}

// c large enough that lambda + I/beta covers every spectrum in play.
constexpr double kHuge = 1e6;

} // namespace

TEST(PointProcess, WindowEndpoints)
{
    const auto w = window(100, 1.0, unit_cube(1), 0.5);
    EXPECT_EQ(w.beta(), 100.0);
    EXPECT_DOUBLE_EQ(w.energy_lo(), 0.49);
    EXPECT_DOUBLE_EQ(w.energy_hi(), 0.51);
    EXPECT_THROW(window(100, 0.0).validate(), ConfigError);
}

TEST(PointProcess, XiMatchesBruteForceDoubleSum)
{
    const auto w = window(50, 20.0);
    const BoxGeometry host = host_box(w, 14);
    const auto H = build_hamiltonian(host, kSpec, SeedPath{8, 3, 0});
    const auto S = eigensolve(H);
    double brute = 0.0;
    for (Eigen::Index j = 0; j < S.size(); ++j) {
        if (S.eigenvalues[j] < w.energy_lo() || S.eigenvalues[j] >= w.energy_hi())
            continue;
        for (long x = 0; x < 50; ++x)
            brute += std::pow(S.eigenvectors(host.index(Site{x, 0, 0}), j), 2);
    }
    EXPECT_GT(brute, 0.0);
    EXPECT_NEAR(xi_count(H, w).value, brute, 1e-10);
}

TEST(PointProcess, XiCompletenessAndEmptyWindow)
{
    const auto full = window(40, kHuge);
    const auto H = build_hamiltonian(host_box(full, 5), kSpec, SeedPath{1, 0, 0});
    EXPECT_NEAR(xi_count(H, full).value, 40.0, 1e-9);
    EXPECT_EQ(xi_count(H, window(40, 1e-9, unit_cube(1), 100.0)).value, 0.0);
    const auto tight = build_hamiltonian(BoxGeometry({5}, {30}), kSpec, SeedPath{1, 0, 0});
    EXPECT_THROW(xi_count(tight, full), DomainError);
}

TEST(PointProcess, EtaPExamples)
{
    const auto w = window(100, kHuge, Rectangle{{0.0}, {0.5}});
    const auto p = partition_box(100, 0.5, unit_cube(1), 1.0);
    const SeedPath seed{2, 4, 0};
    EXPECT_EQ(eta_p_count(p.cells[7], kSpec, seed, w).value, 0.0); // cell [70, 80) outside LQ = [0, 50)
    EXPECT_NEAR(eta_p_count(p.cells[2], kSpec, seed, w).value, 10.0, 1e-9);
    const auto all = window(100, kHuge);
    double total = 0.0;
    for (const auto& cell : p.cells)
        total += eta_p_count(cell, kSpec, seed, all).value;
    EXPECT_NEAR(total, 100.0, 1e-8);
}

TEST(PointProcess, EtaTildeAnchorRule)
{
    const Rectangle Q{{0.25}, {0.75}};
    const auto p = partition_box(100, 0.5, Q, 1.0);
    const SeedPath seed{3, 1, 0};
    const auto w = window(100, kHuge, Q);
    for (std::size_t i = 0; i < p.cells.size(); ++i) {
        const auto s = eta_tilde_count(p, i, kSpec, seed, w);
        const bool anchored = Q.contains(p.anchor(i));
        EXPECT_EQ(s.value, anchored ? static_cast<double>(p.cells[i].size()) : 0.0);
    }
    // Cell [20, 30) meets LQ = [25, 75) but its anchor 0.2 is outside Q.
    EXPECT_EQ(p.cells.front().lows()[0], 20);
    EXPECT_EQ(eta_tilde_count(p, 0, kSpec, seed, w).value, 0.0);
}

TEST(PointProcess, EtaTildeWithinCountOfEtaP)
{
    const auto w = window(100, 40.0, Rectangle{{0.13}, {0.87}});
    const auto p = partition_box(100, 0.5, w.Q, 1.0);
    for (std::uint64_t r = 0; r < 20; ++r) {
        const SeedPath seed{4, r, 0};
        for (std::size_t i = 0; i < p.cells.size(); ++i) {
            const double tilde = eta_tilde_count(p, i, kSpec, seed, w).value;
            const double weight = eta_p_count(p.cells[i], kSpec, seed, w).value;
            const auto H = build_hamiltonian(p.cells[i], kSpec, seed);
            const double count = static_cast<double>(count_in_window(H, w.energy_lo(), w.energy_hi()));
            EXPECT_LE(std::abs(tilde - weight), count + 1e-12);
            EXPECT_EQ(tilde, std::round(tilde));
        }
    }
}

TEST(PointProcess, EtaLSingleCellAndAdditivity)
{
    const SeedPath seed{5, 2, 0};
    const auto single = partition_box(4, 0.5, Rectangle{{0.0}, {0.5}}, 1.0); // l = 2, one cell
    ASSERT_EQ(single.cells.size(), 1u);
    const auto w1 = window(4, 3.0, Rectangle{{0.0}, {0.5}});
    EXPECT_EQ(eta_L_count(single, kSpec, seed, w1).value, eta_tilde_count(single, 0, kSpec, seed, w1).value);

    const Rectangle A{{0.0}, {0.5}}, B{{0.5}, {1.0}};
    const auto pa = partition_box(100, 0.5, A, 1.0), pb = partition_box(100, 0.5, B, 1.0),
               pu = partition_box(100, 0.5, unit_cube(1), 1.0);
    for (std::uint64_t r = 0; r < 10; ++r) {
        const SeedPath s{5, r, 0};
        const double a = eta_L_count(pa, kSpec, s, window(100, 50.0, A)).value;
        const double b = eta_L_count(pb, kSpec, s, window(100, 50.0, B)).value;
        const double u = eta_L_count(pu, kSpec, s, window(100, 50.0)).value;
        EXPECT_EQ(a + b, u);
    }
}

TEST(PointProcess, DisjointCellsUncorrelated)
{
    const auto w = window(100, 60.0);
    const auto p = partition_box(100, 0.5, unit_cube(1), 1.0);
    const std::size_t n = 2000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const SeedPath seed{6, r, 0};
        const double a = eta_tilde_count(p, 3, kSpec, seed, w).value;
        const double b = eta_tilde_count(p, 4, kSpec, seed, w).value;
        sa += a, sb += b, sab += a * b, saa += a * a, sbb += b * b;
    }
    const double N = static_cast<double>(n);
    const double cov = sab / N - (sa / N) * (sb / N);
    const double corr = cov / std::sqrt((saa / N - sa * sa / N / N) * (sbb / N - sb * sb / N / N));
    EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(N));
}

TEST(PointProcess, PerturbationIdentityChain)
{
    const auto H = build_hamiltonian(BoxGeometry({0}, {30}), kSpec, SeedPath{7, 0, 0});
    const auto cell = restrict_to(H, BoxGeometry({10}, {20}));
    const auto t = perturbation_identity(H, cell, {0.0, 1.0}, Site{15, 0, 0}, 2);
    EXPECT_LE(t.residual(), 1e-10);
    EXPECT_GT(std::abs(t.lhs), 0.0);

    const auto same = perturbation_identity(H, H, {0.3, 0.5}, Site{15, 0, 0}, 2);
    EXPECT_EQ(same.rhs, std::complex<double>(0.0));
    EXPECT_LE(std::abs(same.lhs), 1e-15);

    EXPECT_THROW(perturbation_identity(H, cell, {0.0, 1.0}, Site{11, 0, 0}, 2), DomainError);
}

TEST(PointProcess, PerturbationIdentityRandomConfigurations)
{
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 2;
        const long side = d == 1 ? 120 : 14;
        const auto H = build_hamiltonian(BoxGeometry::cube(d, 0, side), kSpec, SeedPath{9, static_cast<std::uint64_t>(trial), 0});
        const long lo = std::uniform_int_distribution<long>(1, 3)(rng);
        const long hi = side - std::uniform_int_distribution<long>(1, 3)(rng);
        std::vector<long> lows(d, lo), highs(d, hi);
        const auto cell = restrict_to(H, BoxGeometry(lows, highs));
        Site n{0, 0, 0};
        for (int axis = 0; axis < d; ++axis)
            n[axis] = std::uniform_int_distribution<long>(lo + 3, hi - 4)(rng);
        const std::complex<double> z(std::uniform_real_distribution<double>(-5, 5)(rng), 0.1);
        worst = std::max(worst, perturbation_identity(H, cell, z, n, 2).residual());
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(PointProcess, PerturbationResidualScales)
{
    const auto H = build_hamiltonian(BoxGeometry({0}, {40}), kSpec, SeedPath{10, 0, 0});
    const auto cell = restrict_to(H, BoxGeometry({12}, {28}));
    const auto t = perturbation_identity(H, cell, {0.4, 0.3}, Site{20, 0, 0}, 3);
    const std::complex<double> k(3.0, -2.0);
    EXPECT_NEAR(std::abs(k * t.lhs - k * t.rhs), std::abs(k) * t.residual(), 1e-14);
}

TEST(PointProcess, MonotoneInWindowAndRegion)
{
    const auto p = partition_box(100, 0.5, unit_cube(1), 1.0);
    const Rectangle small{{0.2}, {0.6}};
    const auto p_small = partition_box(100, 0.5, small, 1.0);
    for (std::uint64_t r = 0; r < 10; ++r) {
        const SeedPath seed{11, r, 0};
        const auto H = build_hamiltonian(host_box(window(100, 1.0), 20), kSpec, seed);
        EXPECT_LE(xi_count(H, window(100, 20.0)).value, xi_count(H, window(100, 60.0)).value + 1e-9);
        EXPECT_LE(xi_count(H, window(100, 60.0, small)).value, xi_count(H, window(100, 60.0)).value + 1e-9);
        EXPECT_LE(eta_L_count(p, kSpec, seed, window(100, 20.0)).value,
                  eta_L_count(p, kSpec, seed, window(100, 60.0)).value);
        EXPECT_LE(eta_L_count(p_small, kSpec, seed, window(100, 60.0, small)).value,
                  eta_L_count(p, kSpec, seed, window(100, 60.0)).value);
    }
}

TEST(PointProcess, AllMeasuresAgreeOnTotalMass)
{
    const auto w = window(100, kHuge);
    const auto p = partition_box(100, 0.5, unit_cube(1), 1.0);
    RealizationOptions options;
    options.padding = 10;
    const auto rec = simulate_realization(kSpec, w, p, 12, 0, options);
    EXPECT_NEAR(rec.xi, 100.0, 1e-8);
    EXPECT_NEAR(rec.eta_p_sum, 100.0, 1e-8);
    EXPECT_EQ(rec.eta_L, 100);
}

TEST(PointProcess, RealizationDeterministicAndPathIndependent)
{
    const auto w = window(200, 1.0);
    const auto p = partition_box(200, 0.5, unit_cube(1), 2.0);
    RealizationOptions counts;
    counts.with_xi = false;
    counts.with_eta_p = false;
    for (std::size_t r = 0; r < 50; ++r) {
        const auto a = simulate_realization(kSpec, w, p, 13, r);
        const auto b = simulate_realization(kSpec, w, p, 13, r);
        const auto c = simulate_realization(kSpec, w, p, 13, r, counts);
        EXPECT_EQ(a.xi, b.xi);
        EXPECT_EQ(a.cell_counts, b.cell_counts);
        EXPECT_EQ(a.cell_counts, c.cell_counts); // host restriction vs direct cell build
        for (std::size_t i = 0; i < p.cells.size(); ++i) {
            const auto H = build_hamiltonian(p.cells[i], kSpec, SeedPath{13, r, 0});
            EXPECT_EQ(a.cell_counts[i], count_in_window(H, w.energy_lo(), w.energy_hi()));
        }
    }
}

TEST(PointProcess, GapPreconditionsAndWorkers)
{
    const auto w = window(100, 1.0);
    const auto p = partition_box(100, 0.5, unit_cube(1), 2.0);
    EXPECT_THROW(xi_eta_gap(kSpec, w, p, 0, 1), ConfigError);
    const auto a = xi_eta_gap(kSpec, w, p, 200, 14, 1);
    const auto b = xi_eta_gap(kSpec, w, p, 200, 14, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_GE(a.mean, 0.0);
}

TEST(PointProcess, UnpaddedSingleCellHasNoGap)
{
    const auto w = window(4, 30.0, Rectangle{{0.0}, {0.5}});
    const auto p = partition_box(4, 0.5, w.Q, 1.0);
    ASSERT_EQ(p.cells.size(), 1u);
    RealizationOptions o;
    o.padding = 0;
    const auto rec = simulate_realization(kSpec, w, p, 15, 0, o);
    EXPECT_NEAR(rec.xi, rec.eta_p_sum, 1e-12);
    EXPECT_NEAR(rec.gap(), 0.0, 1e-12);
}

TEST(PointProcess, PaddingConvergence)
{
    const auto w = window(100, 1.0);
    const auto p = partition_box(100, 0.5, unit_cube(1), 2.0);
    double change = 0.0;
    const int n = 100;
    for (int r = 0; r < n; ++r) {
        RealizationOptions a, b;
        a.padding = 20;
        b.padding = 40;
        change += std::abs(simulate_realization(kSpec, w, p, 16, r, a).xi - simulate_realization(kSpec, w, p, 16, r, b).xi);
    }
    EXPECT_LT(change / n, 1e-3);
}

TEST(PointProcess, SampleRecordFields)
{
    const CountSample s{MeasureKind::EtaL, 3.0, 17, window(100, 1.0)};
    const auto j = sample_record(s);
    for (const char* key : {"kind", "realization", "L", "lambda", "c", "Q", "value"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j.at("kind"), to_string(MeasureKind::EtaL));
}
