#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "anderson/disorder.hpp"
#include "anderson/errors.hpp"

using namespace anderson;

namespace {

// Kolmogorov-Smirnov distance between sorted samples and a CDF.
template <typename Cdf>
double ks_distance(std::vector<double> xs, Cdf F)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = F(xs[i]);
        worst = std::max({worst, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return worst;
}

std::vector<double> draws(const DisorderSpec& spec, std::size_t n, std::uint64_t seed)
{
    const Eigen::VectorXd v = sample_potential(spec, SeedPath{seed, 3, 0}, static_cast<Eigen::Index>(n));
    return {v.data(), v.data() + v.size()};
}

} // namespace

TEST(Disorder, UniformValuesStayInSupport)
{
    const auto spec = uniform_disorder(0.0, 1.0, 1.0);
    for (double v : draws(spec, 10000, 42)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Disorder, AlphaPowerInverseCdf)
{
    const auto spec = alpha_power_disorder(0.5, 1.0);
    EXPECT_NEAR(inverse_cdf(spec, 0.25), 0.0625, 1e-15);
    EXPECT_NEAR(cdf(spec, 0.0625), 0.25, 1e-15);
}

TEST(Disorder, SameSeedPathSameSequence)
{
    const auto spec = uniform_disorder(-0.5, 0.5, 8.0);
    const SeedPath seed{99, 17, 1000};
    EXPECT_EQ(sample_potential(spec, seed, 500), sample_potential(spec, seed, 500));
    EXPECT_NE(sample_potential(spec, seed, 5), sample_potential(spec, SeedPath{99, 18, 1000}, 5));
}

TEST(Disorder, UniformMatchesAnalyticCdf)
{
    const auto spec = uniform_disorder(-0.5, 0.5, 8.0);
    const double ks = ks_distance(draws(spec, 100000, 7), [](double x) { return std::clamp(x / 8.0 + 0.5, 0.0, 1.0); });
    EXPECT_LE(ks, 0.01);
}

TEST(Disorder, AlphaPowerMatchesAnalyticCdf)
{
    const auto spec = alpha_power_disorder(0.5, 1.0);
    const double ks = ks_distance(draws(spec, 100000, 8), [](double x) { return std::sqrt(std::clamp(x, 0.0, 1.0)); });
    EXPECT_LE(ks, 0.01);
}

TEST(Disorder, ConcentrationExamples)
{
    EXPECT_NEAR(concentration(uniform_disorder(0.0, 1.0, 1.0), 0.1), 0.1, 1e-15);
    EXPECT_NEAR(concentration(alpha_power_disorder(0.5, 1.0), 0.04), 0.2, 1e-15);
}

TEST(Disorder, ConcentrationAgreesWithBruteForceSup)
{
    const double s = 0.04;
    double best = 0.0;
    // Integer grid of step 1e-6 on [-s, 1]; it hits a = 0 exactly.
    for (long k = 0; k <= 1040000; ++k) {
        const double a = static_cast<double>(k - 40000) / 1e6;
        const double hi = std::sqrt(std::clamp(a + s, 0.0, 1.0));
        const double lo = std::sqrt(std::clamp(a, 0.0, 1.0));
        best = std::max(best, hi - lo);
    }
    EXPECT_NEAR(concentration(alpha_power_disorder(0.5, 1.0), s), best, 1e-6);
}

TEST(Disorder, WegnerConstantBranches)
{
    EXPECT_NEAR(wegner_constant(uniform_disorder(0.0, 1.0, 1.0), 0.2), 0.2, 1e-15);
    EXPECT_NEAR(wegner_constant(alpha_power_disorder(0.5, 1.0), 0.04), 1.6, 1e-14);
}

TEST(Disorder, WegnerConstantMonotoneToZero)
{
    for (const auto& spec : {uniform_disorder(0.0, 1.0, 1.0), alpha_power_disorder(0.5, 1.0), alpha_power_disorder(0.8, 2.0, -1.0, 3.0)}) {
        double previous = wegner_constant(spec, 1.0);
        for (double s = 0.5; s > 1e-9; s /= 2) {
            const double q = wegner_constant(spec, s);
            EXPECT_LE(q, previous);
            previous = q;
        }
        EXPECT_LT(previous, 1e-3);
    }
}

TEST(Disorder, HolderBoundOnLogGrid)
{
    const auto spec = alpha_power_disorder(0.5, 1.0);
    for (double s = 1e-6; s <= 1.0; s *= 1.5)
        EXPECT_LE(concentration(spec, s), spec.holder_const * std::pow(s, spec.alpha) * (1 + 1e-12));
}

TEST(Disorder, CoupledWegnerConstantRescalesWidth)
{
    const auto spec = uniform_disorder(-0.5, 0.5, 8.0);
    EXPECT_NEAR(coupled_wegner_constant(spec, 0.4), 0.05, 1e-15);
    EXPECT_THROW(coupled_wegner_constant(uniform_disorder(-0.5, 0.5, 0.0), 0.4), ConfigError);
}

TEST(Disorder, DistinctPathsGiveDistinctWords)
{
    std::set<double> seen;
    for (std::uint64_t r = 0; r < 50; ++r)
        for (std::uint64_t site = 0; site < 200; ++site)
            seen.insert(uniform_variate(SeedPath{5, r, site}));
    EXPECT_EQ(seen.size(), 50u * 200u);
}

TEST(Disorder, SeedRangeLimits)
{
    EXPECT_THROW(uniform_variate(SeedPath{1, 1ULL << kRealizationBits, 0}), ResourceError);
    EXPECT_THROW(uniform_variate(SeedPath{1, 0, 1ULL << kSiteBits}), ResourceError);
}

TEST(Disorder, InvalidSpecsRejected)
{
    EXPECT_THROW(uniform_disorder(1.0, 0.0, 1.0).validate(), ConfigError);
    EXPECT_THROW(alpha_power_disorder(1.5, 1.0).validate(), ConfigError);
    EXPECT_THROW(alpha_power_disorder(0.0, 1.0).validate(), ConfigError);
    EXPECT_THROW(uniform_disorder(0.0, 1.0, -1.0).validate(), ConfigError);
}

TEST(Disorder, JsonRoundTrip)
{
    const auto spec = alpha_power_disorder(0.5, 2.0, -1.0, 1.0);
    const nlohmann::json j = spec;
    EXPECT_EQ(j.at("family"), "AlphaPower");
    const auto back = j.get<DisorderSpec>();
    EXPECT_EQ(back.family, spec.family);
    EXPECT_EQ(back.v_min, spec.v_min);
    EXPECT_EQ(back.v_max, spec.v_max);
    EXPECT_EQ(back.alpha, spec.alpha);
    EXPECT_EQ(back.coupling, spec.coupling);
}
