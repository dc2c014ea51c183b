#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "anderson/errors.hpp"
#include "anderson/lattice.hpp"

using namespace anderson;

TEST(Lattice, SingleEdgeAdjacency)
{
    const auto H = hamiltonian_from_potential(BoxGeometry({0}, {2}), Eigen::VectorXd::Zero(2));
    Eigen::Matrix2d expected;
    expected << 0, 1, 1, 0;
    EXPECT_EQ(H.dense(), expected);
}

TEST(Lattice, TridiagonalWithPotential)
{
    const auto H = hamiltonian_from_potential(BoxGeometry({0}, {3}), Eigen::Vector3d(1, 2, 3));
    Eigen::Matrix3d expected;
    expected << 1, 1, 0, 1, 2, 1, 0, 1, 3;
    EXPECT_EQ(H.dense(), expected);
}

TEST(Lattice, FourCycleSpectrum)
{
    const auto H = hamiltonian_from_potential(BoxGeometry::cube(2, 0, 2), Eigen::VectorXd::Zero(4));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H.dense());
    const Eigen::Vector4d expected(-2, 0, 0, 2);
    EXPECT_LT((solver.eigenvalues() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lattice, IndexRoundTrip)
{
    const BoxGeometry box({-2, 3, 1}, {2, 6, 4});
    EXPECT_EQ(box.size(), 4 * 3 * 3);
    for (Eigen::Index i = 0; i < box.size(); ++i)
        EXPECT_EQ(box.index(box.site(i)), i);
    EXPECT_THROW(box.index(Site{2, 3, 1}), DomainError);
    EXPECT_THROW(BoxGeometry({0}, {0}), ConfigError);
}

TEST(Lattice, MatrixEntriesFollowDefinition)
{
    const BoxGeometry box({0, 0}, {4, 5});
    const auto H = build_hamiltonian(box, uniform_disorder(-0.5, 0.5, 3.0), SeedPath{11, 2, 0});
    const Eigen::MatrixXd M = H.dense();
    EXPECT_EQ(M, M.transpose());
    for (Eigen::Index i = 0; i < box.size(); ++i)
        for (Eigen::Index j = 0; j < box.size(); ++j) {
            const Site a = box.site(i), b = box.site(j);
            const long l1 = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]);
            const double expected = i == j ? H.potential[i] : (l1 == 1 ? 1.0 : 0.0);
            EXPECT_EQ(M(i, j), expected);
        }
}

TEST(Lattice, RowSumsCountNeighbours)
{
    const BoxGeometry box = BoxGeometry::cube(3, 0, 4);
    const auto H = hamiltonian_from_potential(box, Eigen::VectorXd::Zero(box.size()));
    const Eigen::VectorXd sums = H.dense().rowwise().sum();
    for (Eigen::Index i = 0; i < box.size(); ++i) {
        const Site x = box.site(i);
        int neighbours = 0;
        for (int axis = 0; axis < 3; ++axis)
            neighbours += (x[axis] > 0) + (x[axis] < 3);
        EXPECT_EQ(sums[i], neighbours);
    }
}

TEST(Lattice, BuildIsReproducibleAndRestrictionShared)
{
    const auto spec = uniform_disorder(-0.5, 0.5, 8.0);
    const SeedPath seed{3, 9, 0};
    const BoxGeometry host = BoxGeometry::cube(2, -3, 9);
    const auto H1 = build_hamiltonian(host, spec, seed);
    const auto H2 = build_hamiltonian(host, spec, seed);
    EXPECT_EQ(H1.potential, H2.potential);
    const BoxGeometry cell({-1, 0}, {2, 4});
    const auto direct = build_hamiltonian(cell, spec, seed);
    const auto restricted = restrict_to(H1, cell);
    EXPECT_EQ(direct.potential, restricted.potential);
    EXPECT_EQ(direct.dense(), restricted.dense());
}

TEST(Lattice, ResourceLimit)
{
    EXPECT_THROW(build_hamiltonian(BoxGeometry::cube(1, 0, 200), uniform_disorder(0, 1, 1), SeedPath{}, 100),
                 ResourceError);
}

TEST(Lattice, PartitionOneDimensional)
{
    const auto p = partition_box(100, 0.5, unit_cube(1), 2.0);
    EXPECT_EQ(p.sub_scale, 10);
    EXPECT_EQ(p.cells.size(), 10u);
    EXPECT_EQ(p.interior_margin, 10); // ceil(2 ln 100) = ceil(9.21)
    EXPECT_DOUBLE_EQ(gamma_size_bound(100, 10, unit_cube(1)), 10.0);
}

TEST(Lattice, PartitionTwoDimensionalTiling)
{
    const auto p = partition_box(16, 0.5, unit_cube(2), 1.0);
    ASSERT_EQ(p.cells.size(), 16u);
    std::set<std::pair<long, long>> covered;
    for (const auto& cell : p.cells) {
        EXPECT_EQ(cell.extent(0), 4);
        EXPECT_EQ(cell.extent(1), 4);
        for (Eigen::Index i = 0; i < cell.size(); ++i) {
            const Site x = cell.site(i);
            EXPECT_TRUE(covered.insert({x[0], x[1]}).second) << "cells overlap";
        }
    }
    EXPECT_EQ(covered.size(), 256u);
    EXPECT_EQ(covered.begin()->first, 0);
    EXPECT_EQ(covered.rbegin()->first, 15);
}

TEST(Lattice, PartitionCoversUnalignedRegion)
{
    Rectangle Q{{0.13, 0.2}, {0.71, 0.9}};
    const long L = 60;
    const auto p = partition_box(L, 0.6, Q, 1.5);
    const BoxGeometry region = scaled_region(L, Q);
    std::set<std::pair<long, long>> in_cells;
    for (const auto& cell : p.cells)
        for (Eigen::Index i = 0; i < cell.size(); ++i) {
            const Site x = cell.site(i);
            EXPECT_TRUE(in_cells.insert({x[0], x[1]}).second);
        }
    for (Eigen::Index i = 0; i < region.size(); ++i) {
        const Site x = region.site(i);
        EXPECT_TRUE(in_cells.count({x[0], x[1]})) << "site of LQ not covered";
    }
    // Every cell meets LQ.
    for (const auto& cell : p.cells) {
        bool meets = false;
        for (Eigen::Index i = 0; i < cell.size() && !meets; ++i)
            meets = region.contains(cell.site(i));
        EXPECT_TRUE(meets);
    }
    EXPECT_LE(static_cast<double>(p.cells.size()), gamma_size_bound_general(L, p.sub_scale, Q));
}

TEST(Lattice, PartitionAlignedSiteCount)
{
    const Rectangle Q{{0.0, 0.25}, {0.5, 1.0}};
    const auto p = partition_box(64, 0.5, Q, 1.0);
    Eigen::Index total = 0;
    for (const auto& cell : p.cells)
        total += cell.size();
    EXPECT_EQ(total, scaled_region(64, Q).size());
    EXPECT_DOUBLE_EQ(static_cast<double>(p.cells.size()), gamma_size_bound(64, p.sub_scale, Q));
}

TEST(Lattice, PartitionRejectsLargeSubScale)
{
    EXPECT_THROW(partition_box(1, 0.5, unit_cube(1), 1.0), ConfigError);
    EXPECT_THROW(sub_scale(100, 1.0), ConfigError);
}

TEST(Lattice, BoundaryLayersChain)
{
    const auto layers = boundary_layers(BoxGeometry({0}, {10}), 2);
    ASSERT_EQ(layers.interior.size(), 4u);
    EXPECT_EQ(layers.interior.front(), 3);
    EXPECT_EQ(layers.interior.back(), 6);
    ASSERT_EQ(layers.boundary_pairs.size(), 2u);
    EXPECT_EQ(layers.boundary_pairs[0].first[0], 0);
    EXPECT_EQ(layers.boundary_pairs[0].second[0], -1);
    EXPECT_EQ(layers.boundary_pairs[1].first[0], 9);
    EXPECT_EQ(layers.boundary_pairs[1].second[0], 10);
}

TEST(Lattice, BoundaryLayersMatchBruteForce)
{
    for (long side : {4L, 6L, 7L}) {
        for (long margin : {1L, 2L}) {
            const BoxGeometry box = BoxGeometry::cube(2, 0, side);
            const auto layers = boundary_layers(box, margin);
            // Interior: distance to the inner boundary layer exceeds the margin.
            std::vector<std::pair<long, long>> shell;
            for (long x = 0; x < side; ++x)
                for (long y = 0; y < side; ++y)
                    if (x == 0 || y == 0 || x == side - 1 || y == side - 1)
                        shell.push_back({x, y});
            std::size_t interior = 0;
            for (long x = 0; x < side; ++x)
                for (long y = 0; y < side; ++y) {
                    long d = side * 4;
                    for (auto [bx, by] : shell)
                        d = std::min(d, std::abs(x - bx) + std::abs(y - by));
                    interior += d > margin;
                }
            EXPECT_EQ(layers.interior.size(), interior);
            std::size_t pairs = 0;
            for (long x = -1; x <= side; ++x)
                for (long y = -1; y <= side; ++y) {
                    const bool outside = x < 0 || y < 0 || x >= side || y >= side;
                    if (!outside)
                        continue;
                    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                        const long mx = x + dx, my = y + dy;
                        pairs += mx >= 0 && my >= 0 && mx < side && my < side;
                    }
                }
            EXPECT_EQ(layers.boundary_pairs.size(), pairs);
        }
    }
}

TEST(Lattice, BoundaryLayersFrozenCounts)
{
    EXPECT_EQ(boundary_layers(BoxGeometry::cube(2, 0, 4), 1).interior.size(), 0u);
    EXPECT_EQ(boundary_layers(BoxGeometry::cube(2, 0, 4), 1).boundary_pairs.size(), 16u);
    EXPECT_EQ(boundary_layers(BoxGeometry::cube(2, 0, 6), 1).interior.size(), 4u);
    EXPECT_TRUE(boundary_layers(BoxGeometry::cube(2, 0, 5), 5).interior_empty());
    EXPECT_THROW(boundary_layers(BoxGeometry::cube(1, 0, 5), 0), ConfigError);
}

TEST(Lattice, BoundaryShellWithinLogBound)
{
    for (long L : {100L, 400L, 1600L}) {
        for (int d : {1, 2}) {
            const auto p = partition_box(L, 0.5, unit_cube(d), 1.0);
            const BoxGeometry& cell = p.cells.front();
            const auto layers = boundary_layers(cell, p.interior_margin);
            const double shell = static_cast<double>(cell.size()) - static_cast<double>(layers.interior.size());
            EXPECT_LE(shell, 2.0 * d * (p.interior_margin + 1) * std::pow(p.sub_scale, d - 1));
        }
    }
}

TEST(Lattice, JsonOfGeometry)
{
    const BoxGeometry box({1, -2}, {4, 3});
    const nlohmann::json j = box;
    EXPECT_EQ(j.get<BoxGeometry>(), box);
    const nlohmann::json q = Rectangle{{0.0}, {0.5}};
    EXPECT_EQ(q.get<Rectangle>().highs[0], 0.5);
}
