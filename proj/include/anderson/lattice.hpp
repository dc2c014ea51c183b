#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "anderson/disorder.hpp"

namespace anderson {

inline constexpr int kMaxDim = 3;
inline constexpr Eigen::Index kDefaultMaxSites = 100000;

// Lattice point of Z^d, d <= 3; unused trailing coordinates are zero.
using Site = std::array<long, kMaxDim>;

// Rectangular region prod_j [lows_j, highs_j) of Z^d, row-major indexed
// (last axis fastest).
class BoxGeometry {
public:
    BoxGeometry() = default;
    BoxGeometry(std::vector<long> lows, std::vector<long> highs);

    static BoxGeometry cube(int dim, long low, long side);

    int dim() const { return static_cast<int>(lows_.size()); }
    Eigen::Index size() const { return size_; }
    const std::vector<long>& lows() const { return lows_; }
    const std::vector<long>& highs() const { return highs_; }
    long extent(int axis) const { return highs_[axis] - lows_[axis]; }
    Eigen::Index stride(int axis) const { return strides_[axis]; }
    // Largest index offset between lattice neighbours.
    Eigen::Index bandwidth() const { return dim() > 0 ? strides_[0] : 0; }

    bool contains(const Site& x) const;
    bool contains(const BoxGeometry& other) const;
    // Throws DomainError when x is outside the box.
    Eigen::Index index(const Site& x) const;
    Site site(Eigen::Index i) const;
    // Key of a site for the counter-based potential draws.
    std::uint64_t site_key(const Site& x) const;

    bool operator==(const BoxGeometry& other) const = default;

private:
    std::vector<long> lows_;
    std::vector<long> highs_;
    std::vector<Eigen::Index> strides_;
    Eigen::Index size_ = 0;
};

// Global seed key of a lattice point; identical for every box containing it.
std::uint64_t lattice_site_key(int dim, const Site& x);

// H_B = Delta_B + diag(potential) with free truncation at the box faces.
struct FiniteHamiltonian {
    BoxGeometry geometry;
    Eigen::VectorXd potential;
    Eigen::SparseMatrix<double> matrix;
    SeedPath seed;

    Eigen::Index size() const { return geometry.size(); }
    bool is_chain() const { return geometry.dim() == 1; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

// Adjacency matrix of the box (nearest neighbours at l1 distance 1).
template <typename Scalar>
Eigen::SparseMatrix<Scalar> laplacian(const BoxGeometry& geom)
{
    using Triplet = Eigen::Triplet<Scalar>;
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(2 * geom.dim() * geom.size()));
    for (Eigen::Index i = 0; i < geom.size(); ++i) {
        const Site x = geom.site(i);
        for (int axis = 0; axis < geom.dim(); ++axis) {
            if (x[axis] + 1 < geom.highs()[axis]) {
                const Eigen::Index j = i + geom.stride(axis);
                entries.emplace_back(i, j, Scalar(1));
                entries.emplace_back(j, i, Scalar(1));
            }
        }
    }
    Eigen::SparseMatrix<Scalar> adjacency(geom.size(), geom.size());
    adjacency.setFromTriplets(entries.begin(), entries.end());
    return adjacency;
}

FiniteHamiltonian hamiltonian_from_potential(const BoxGeometry& geom, Eigen::VectorXd potential);

// Potential values are drawn per global site key, so restricting the host box
// to a sub-box reproduces exactly the sub-box Hamiltonian built from the same seed.
// Throws ResourceError above max_sites.
FiniteHamiltonian build_hamiltonian(const BoxGeometry& geom, const DisorderSpec& spec, const SeedPath& seed,
                                    Eigen::Index max_sites = kDefaultMaxSites);

// H restricted to a sub-box (same potential values).
FiniteHamiltonian restrict_to(const FiniteHamiltonian& H, const BoxGeometry& sub);

// Axis-aligned rectangle prod_j [lows_j, highs_j) in R^d.
struct Rectangle {
    std::vector<double> lows;
    std::vector<double> highs;

    int dim() const { return static_cast<int>(lows.size()); }
    double volume() const;
    bool contains(const std::vector<double>& x) const;
    void validate() const;
};

Rectangle unit_cube(int dim);

// Lattice sites of LQ, i.e. x with L*lows_j <= x_j < L*highs_j.
BoxGeometry scaled_region(long L, const Rectangle& Q);

// l_L = round(L^a).
long sub_scale(long L, double a);
// N_L = ceil(gamma_log * ln L).
long interior_margin(long L, double gamma_log);

struct BoxPartition {
    long parent_scale = 0;
    double exponent = 0.5;
    long sub_scale = 0;
    double gamma_log = 0.0;
    long interior_margin = 0;
    // cells[i] = B_p(L) for p = gamma_set[i].
    std::vector<BoxGeometry> cells;
    std::vector<std::vector<long>> gamma_set;

    // Anchor p * l_L / L of cell i.
    std::vector<double> anchor(std::size_t i) const;
};

// Cells B_p(L) = prod_j [p_j l_L, (p_j+1) l_L) meeting LQ.
// Throws ConfigError when l_L >= L.
BoxPartition partition_box(long L, double a, const Rectangle& Q, double gamma_log);

// (L/l_L)^d |Q|; attained exactly when l_L divides every side of LQ.
double gamma_size_bound(long L, long l, const Rectangle& Q);
// prod_j (L |Q_j| / l_L + 1), valid for any rectangle.
double gamma_size_bound_general(long L, long l, const Rectangle& Q);

struct BoundaryLayers {
    // Linear indices (in the box) of sites at distance > margin from dB.
    std::vector<Eigen::Index> interior;
    // (m, k): m in dB, k outside the box, |m - k| = 1.
    std::vector<std::pair<Site, Site>> boundary_pairs;
    bool interior_empty() const { return interior.empty(); }
};

BoundaryLayers boundary_layers(const BoxGeometry& geom, long margin);

// Lattice (l1) distance from x to the inner boundary layer of the box.
long distance_to_boundary(const BoxGeometry& geom, const Site& x);

void to_json(nlohmann::json& j, const BoxGeometry& geom);
void from_json(const nlohmann::json& j, BoxGeometry& geom);
void to_json(nlohmann::json& j, const Rectangle& r);
void from_json(const nlohmann::json& j, Rectangle& r);
void to_json(nlohmann::json& j, const BoxPartition& p);

} // namespace anderson
