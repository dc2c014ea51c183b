#include "anderson/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anderson/errors.hpp"

namespace anderson {

BoxGeometry::BoxGeometry(std::vector<long> lows, std::vector<long> highs)
    : lows_(std::move(lows)), highs_(std::move(highs))
{
    if (lows_.empty() || lows_.size() != highs_.size())
        throw ConfigError("box needs matching non-empty lows/highs");
    if (lows_.size() > static_cast<std::size_t>(kMaxDim))
        throw ConfigError("box dimension above " + std::to_string(kMaxDim) + " is not supported");
    strides_.assign(lows_.size(), 1);
    size_ = 1;
    for (int axis = dim() - 1; axis >= 0; --axis) {
        if (highs_[axis] <= lows_[axis])
            throw ConfigError("box extent must be positive on every axis");
        strides_[axis] = size_;
        size_ *= highs_[axis] - lows_[axis];
    }
}

BoxGeometry BoxGeometry::cube(int dim, long low, long side)
{
    return BoxGeometry(std::vector<long>(dim, low), std::vector<long>(dim, low + side));
}

bool BoxGeometry::contains(const Site& x) const
{
    for (int axis = 0; axis < dim(); ++axis)
        if (x[axis] < lows_[axis] || x[axis] >= highs_[axis])
            return false;
    return true;
}

bool BoxGeometry::contains(const BoxGeometry& other) const
{
    if (other.dim() != dim())
        return false;
    for (int axis = 0; axis < dim(); ++axis)
        if (other.lows_[axis] < lows_[axis] || other.highs_[axis] > highs_[axis])
            return false;
    return true;
}

Eigen::Index BoxGeometry::index(const Site& x) const
{
    if (!contains(x))
        throw DomainError("site outside box");
    Eigen::Index i = 0;
    for (int axis = 0; axis < dim(); ++axis)
        i += (x[axis] - lows_[axis]) * strides_[axis];
    return i;
}

Site BoxGeometry::site(Eigen::Index i) const
{
    Site x{0, 0, 0};
    for (int axis = 0; axis < dim(); ++axis) {
        x[axis] = lows_[axis] + static_cast<long>(i / strides_[axis]);
        i %= strides_[axis];
    }
    return x;
}

std::uint64_t BoxGeometry::site_key(const Site& x) const
{
    return lattice_site_key(dim(), x);
}

std::uint64_t lattice_site_key(int dim, const Site& x)
{
    const int bits = dim == 1 ? 40 : (dim == 2 ? 20 : 13);
    const long offset = 1L << (bits - 1);
    std::uint64_t key = 0;
    for (int axis = 0; axis < dim; ++axis) {
        const long shifted = x[axis] + offset;
        if (shifted < 0 || shifted >= 2 * offset)
            throw ResourceError("lattice coordinate outside the seedable range");
        key = (key << bits) | static_cast<std::uint64_t>(shifted);
    }
    return key;
}

FiniteHamiltonian hamiltonian_from_potential(const BoxGeometry& geom, Eigen::VectorXd potential)
{
    if (potential.size() != geom.size())
        throw ConfigError("potential length does not match box size");
    FiniteHamiltonian H;
    H.geometry = geom;
    H.matrix = laplacian<double>(geom);
    for (Eigen::Index i = 0; i < geom.size(); ++i)
        H.matrix.coeffRef(i, i) = potential[i];
    H.matrix.makeCompressed();
    H.potential = std::move(potential);
    return H;
}

FiniteHamiltonian build_hamiltonian(const BoxGeometry& geom, const DisorderSpec& spec, const SeedPath& seed,
                                    Eigen::Index max_sites)
{
    spec.validate();
    if (geom.size() > max_sites)
        throw ResourceError("box has " + std::to_string(geom.size()) + " sites, limit is " +
                            std::to_string(max_sites));
    Eigen::VectorXd potential(geom.size());
    SeedPath path = seed;
    for (Eigen::Index i = 0; i < geom.size(); ++i) {
        path.site_index = geom.site_key(geom.site(i));
        potential[i] = draw(spec, path);
    }
    auto H = hamiltonian_from_potential(geom, std::move(potential));
    H.seed = seed;
    H.seed.site_index = 0;
    return H;
}

FiniteHamiltonian restrict_to(const FiniteHamiltonian& H, const BoxGeometry& sub)
{
    if (!H.geometry.contains(sub))
        throw DomainError("sub-box not contained in the Hamiltonian's box");
    Eigen::VectorXd potential(sub.size());
    for (Eigen::Index i = 0; i < sub.size(); ++i)
        potential[i] = H.potential[H.geometry.index(sub.site(i))];
    auto restricted = hamiltonian_from_potential(sub, std::move(potential));
    restricted.seed = H.seed;
    return restricted;
}

double Rectangle::volume() const
{
    double v = 1.0;
    for (int j = 0; j < dim(); ++j)
        v *= highs[j] - lows[j];
    return v;
}

bool Rectangle::contains(const std::vector<double>& x) const
{
    for (int j = 0; j < dim(); ++j)
        if (x[j] < lows[j] || x[j] >= highs[j])
            return false;
    return true;
}

void Rectangle::validate() const
{
    if (lows.empty() || lows.size() != highs.size() || dim() > kMaxDim)
        throw ConfigError("rectangle needs 1..3 matching lows/highs");
    for (int j = 0; j < dim(); ++j)
        if (!std::isfinite(lows[j]) || !std::isfinite(highs[j]) || !(highs[j] > lows[j]))
            throw ConfigError("rectangle must have positive finite sides");
}

Rectangle unit_cube(int dim)
{
    return Rectangle{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

BoxGeometry scaled_region(long L, const Rectangle& Q)
{
    Q.validate();
    std::vector<long> lows(Q.dim()), highs(Q.dim());
    for (int j = 0; j < Q.dim(); ++j) {
        lows[j] = static_cast<long>(std::ceil(L * Q.lows[j]));
        highs[j] = static_cast<long>(std::ceil(L * Q.highs[j]));
        if (highs[j] <= lows[j])
            throw ConfigError("LQ contains no lattice site");
    }
    return BoxGeometry(std::move(lows), std::move(highs));
}

long sub_scale(long L, double a)
{
    if (!(a > 0.0 && a < 1.0))
        throw ConfigError("sub-box exponent a must lie in (0, 1)");
    return std::max(1L, std::lround(std::pow(static_cast<double>(L), a)));
}

long interior_margin(long L, double gamma_log)
{
    if (!(gamma_log > 0.0))
        throw ConfigError("gamma_log must be positive");
    return static_cast<long>(std::ceil(gamma_log * std::log(static_cast<double>(L))));
}

std::vector<double> BoxPartition::anchor(std::size_t i) const
{
    std::vector<double> x;
    for (long p : gamma_set[i])
        x.push_back(static_cast<double>(p * sub_scale) / static_cast<double>(parent_scale));
    return x;
}

BoxPartition partition_box(long L, double a, const Rectangle& Q, double gamma_log)
{
    if (L < 2)
        throw ConfigError("partition needs L >= 2");
    Q.validate();
    BoxPartition part;
    part.parent_scale = L;
    part.exponent = a;
    part.sub_scale = sub_scale(L, a);
    part.gamma_log = gamma_log;
    part.interior_margin = interior_margin(L, gamma_log);
    const long l = part.sub_scale;
    if (l >= L)
        throw ConfigError("sub-box side l_L must be smaller than L");

    const int d = Q.dim();
    std::vector<long> p_lo(d), p_hi(d);
    for (int j = 0; j < d; ++j) {
        p_lo[j] = static_cast<long>(std::floor(L * Q.lows[j] / l));
        p_hi[j] = static_cast<long>(std::ceil(L * Q.highs[j] / l));
    }
    const BoxGeometry index_box(p_lo, p_hi);
    for (Eigen::Index i = 0; i < index_box.size(); ++i) {
        const Site p = index_box.site(i);
        std::vector<long> lows(d), highs(d), pv(d);
        for (int j = 0; j < d; ++j) {
            pv[j] = p[j];
            lows[j] = p[j] * l;
            highs[j] = (p[j] + 1) * l;
        }
        part.cells.emplace_back(std::move(lows), std::move(highs));
        part.gamma_set.push_back(std::move(pv));
    }
    return part;
}

double gamma_size_bound(long L, long l, const Rectangle& Q)
{
    return std::pow(static_cast<double>(L) / static_cast<double>(l), Q.dim()) * Q.volume();
}

double gamma_size_bound_general(long L, long l, const Rectangle& Q)
{
    double bound = 1.0;
    for (int j = 0; j < Q.dim(); ++j)
        bound *= static_cast<double>(L) * (Q.highs[j] - Q.lows[j]) / static_cast<double>(l) + 1.0;
    return bound;
}

long distance_to_boundary(const BoxGeometry& geom, const Site& x)
{
    long dist = geom.extent(0);
    for (int axis = 0; axis < geom.dim(); ++axis) {
        dist = std::min(dist, x[axis] - geom.lows()[axis]);
        dist = std::min(dist, geom.highs()[axis] - 1 - x[axis]);
    }
    return dist;
}

BoundaryLayers boundary_layers(const BoxGeometry& geom, long margin)
{
    if (margin < 1)
        throw ConfigError("boundary margin must be >= 1");
    BoundaryLayers layers;
    for (Eigen::Index i = 0; i < geom.size(); ++i) {
        const Site x = geom.site(i);
        if (distance_to_boundary(geom, x) > margin)
            layers.interior.push_back(i);
        for (int axis = 0; axis < geom.dim(); ++axis) {
            for (long step : {-1L, 1L}) {
                Site k = x;
                k[axis] += step;
                if (!geom.contains(k))
                    layers.boundary_pairs.emplace_back(x, k);
            }
        }
    }
    return layers;
}

void to_json(nlohmann::json& j, const BoxGeometry& geom)
{
    j = nlohmann::json{{"dim", geom.dim()}, {"lows", geom.lows()}, {"highs", geom.highs()}, {"sites", geom.size()}};
}

void from_json(const nlohmann::json& j, BoxGeometry& geom)
{
    geom = BoxGeometry(j.at("lows").get<std::vector<long>>(), j.at("highs").get<std::vector<long>>());
}

void to_json(nlohmann::json& j, const Rectangle& r)
{
    j = nlohmann::json{{"lows", r.lows}, {"highs", r.highs}};
}

void from_json(const nlohmann::json& j, Rectangle& r)
{
    r.lows = j.at("lows").get<std::vector<double>>();
    r.highs = j.at("highs").get<std::vector<double>>();
    r.validate();
}

void to_json(nlohmann::json& j, const BoxPartition& p)
{
    j = nlohmann::json{{"L", p.parent_scale},
                       {"a", p.exponent},
                       {"sub_scale", p.sub_scale},
                       {"gamma_log", p.gamma_log},
                       {"interior_margin", p.interior_margin},
                       {"gamma_set", p.gamma_set}};
}

} // namespace anderson
