#include "anderson/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "anderson/errors.hpp"
#include "anderson/kernels.hpp"

namespace anderson {

namespace {

// Hopping on a chain is identically 1.
Eigen::VectorXd chain_hopping(const FiniteHamiltonian& H)
{
    return Eigen::VectorXd::Ones(std::max<Eigen::Index>(H.size() - 1, 0));
}

double spectral_scale(const FiniteHamiltonian& H)
{
    return H.potential.cwiseAbs().maxCoeff() + 2.0 * H.geometry.dim();
}

std::string provenance(const FiniteHamiltonian& H)
{
    return "box of " + std::to_string(H.size()) + " sites, seed " + std::to_string(H.seed.master_seed) + "/" +
           std::to_string(H.seed.realization_index);
}

// k-th smallest eigenvalue of the chain, known to lie in [lo, hi).
double bisect_eigenvalue(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, Eigen::Index k, double lo,
                         double hi, double tol)
{
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (sturm_count_below(diag, off, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::VectorXd start_vector(Eigen::Index n, Eigen::Index k)
{
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto word = mix64(static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k));
        x[i] = static_cast<double>(word >> 11) * 0x1.0p-53 - 0.5;
    }
    return x.normalized();
}

SpectralData chain_window(const FiniteHamiltonian& H, double lo, double hi)
{
    const Eigen::VectorXd& diag = H.potential;
    const Eigen::VectorXd off = chain_hopping(H);
    const Eigen::Index n = H.size();
    const double scale = spectral_scale(H);
    const double eps = std::numeric_limits<double>::epsilon();

    const Eigen::Index first = sturm_count_below(diag, off, lo);
    const Eigen::Index last = sturm_count_below(diag, off, hi);
    const Eigen::Index m = std::max<Eigen::Index>(last - first, 0);

    SpectralData S;
    S.geometry = H.geometry;
    S.eigenvalues.resize(m);
    S.eigenvectors.resize(n, m);
    const double tol = 4.0 * eps * (1.0 + scale);
    for (Eigen::Index k = 0; k < m; ++k)
        S.eigenvalues[k] = bisect_eigenvalue(diag, off, first + k, lo, hi, tol);

    const double cluster = 1e-3 * (1.0 + scale);
    double previous_shift = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < m; ++k) {
        // Separate numerically coincident shifts so the solves differ.
        double shift = S.eigenvalues[k];
        if (shift - previous_shift < 10.0 * eps * scale)
            shift = previous_shift + 10.0 * eps * scale;
        previous_shift = shift;

        Eigen::Index cluster_start = k;
        while (cluster_start > 0 && S.eigenvalues[k] - S.eigenvalues[cluster_start - 1] < cluster)
            --cluster_start;

        Eigen::VectorXd x = start_vector(n, k);
        const Eigen::VectorXd shifted = diag.array() - shift;
        for (int iteration = 0; iteration < 4; ++iteration) {
            x = solve_tridiagonal<double>(off, shifted, off, x, eps * eps * scale);
            for (Eigen::Index j = cluster_start; j < k; ++j)
                x -= S.eigenvectors.col(j).dot(x) * S.eigenvectors.col(j);
            const double norm = x.norm();
            if (!std::isfinite(norm) || norm == 0.0)
                throw NumericalError("inverse iteration failed on " + provenance(H));
            x /= norm;
        }
        S.eigenvectors.col(k) = x;
    }
    return S;
}

} // namespace

Eigen::VectorXd SpectralData::weights(Eigen::Index site) const
{
    if (site < 0 || site >= geometry.size())
        throw DomainError("site index outside box");
    if (!has_vectors())
        return Eigen::VectorXd::Zero(eigenvalues.size());
    return eigenvectors.row(site).transpose().cwiseAbs2();
}

SpectralData eigensolve(const FiniteHamiltonian& H, bool with_vectors)
{
    if (H.size() > kDenseEigenLimit)
        throw ResourceError("dense eigensolve refused for " + std::to_string(H.size()) + " sites");
    const int options = with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    if (H.is_chain() && H.size() > 1)
        solver.computeFromTridiagonal(H.potential, chain_hopping(H), options);
    else
        solver.compute(H.dense(), options);
    if (solver.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolver did not converge on " + provenance(H));

    SpectralData S;
    S.geometry = H.geometry;
    S.eigenvalues = solver.eigenvalues();
    if (with_vectors)
        S.eigenvectors = solver.eigenvectors();
    return S;
}

SpectralData window_spectrum(const FiniteHamiltonian& H, double lo, double hi)
{
    if (!(hi > lo)) {
        SpectralData empty;
        empty.geometry = H.geometry;
        return empty;
    }
    if (H.is_chain() && H.size() > 1)
        return chain_window(H, lo, hi);

    const SpectralData full = eigensolve(H, true);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < full.size(); ++j)
        if (full.eigenvalues[j] >= lo && full.eigenvalues[j] < hi)
            keep.push_back(j);
    SpectralData S;
    S.geometry = H.geometry;
    S.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
    S.eigenvectors.resize(H.size(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        S.eigenvalues[static_cast<Eigen::Index>(c)] = full.eigenvalues[keep[c]];
        S.eigenvectors.col(static_cast<Eigen::Index>(c)) = full.eigenvectors.col(keep[c]);
    }
    return S;
}

Eigen::Index count_in_window(const SpectralData& S, double lo, double hi)
{
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < S.size(); ++j)
        if (S.eigenvalues[j] >= lo && S.eigenvalues[j] < hi)
            ++count;
    return count;
}

Eigen::Index count_below(const FiniteHamiltonian& H, double E)
{
    if (H.is_chain())
        return sturm_count_below(H.potential, chain_hopping(H), E);
    return banded_count_below(H.matrix, H.geometry.bandwidth(), E);
}

Eigen::Index count_in_window(const FiniteHamiltonian& H, double lo, double hi)
{
    if (!(hi > lo))
        return 0;
    return count_below(H, hi) - count_below(H, lo);
}

double local_weight(const SpectralData& S, double lo, double hi, std::span<const Eigen::Index> sites)
{
    for (Eigen::Index n : sites)
        if (n < 0 || n >= S.geometry.size())
            throw DomainError("site index outside box");
    if (!S.has_vectors())
        return 0.0;
    double total = 0.0;
    for (Eigen::Index j = 0; j < S.size(); ++j) {
        if (S.eigenvalues[j] < lo || S.eigenvalues[j] >= hi)
            continue;
        for (Eigen::Index n : sites)
            total += S.eigenvectors(n, j) * S.eigenvectors(n, j);
    }
    return total;
}

namespace {

void require_upper_half_plane(std::complex<double> z)
{
    if (!(z.imag() > 0.0))
        throw DomainError("resolvent needs Im z > 0");
}

Eigen::SparseMatrix<std::complex<double>> shifted_complex(const FiniteHamiltonian& H, std::complex<double> z)
{
    Eigen::SparseMatrix<std::complex<double>> A = H.matrix.cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < H.size(); ++i)
        A.coeffRef(i, i) -= z;
    A.makeCompressed();
    return A;
}

} // namespace

Eigen::VectorXcd green_column(const FiniteHamiltonian& H, std::complex<double> z, Eigen::Index m)
{
    require_upper_half_plane(z);
    if (m < 0 || m >= H.size())
        throw DomainError("site index outside box");
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(H.size());
    rhs[m] = 1.0;
    if (H.is_chain()) {
        const Eigen::VectorXcd off = chain_hopping(H).cast<std::complex<double>>();
        const Eigen::VectorXcd diag = H.potential.cast<std::complex<double>>().array() - z;
        return solve_tridiagonal<std::complex<double>>(off, diag, off, rhs);
    }
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
    lu.compute(shifted_complex(H, z));
    if (lu.info() != Eigen::Success)
        throw NumericalError("sparse LU failed on " + provenance(H));
    return lu.solve(rhs);
}

GreenEntries green(const FiniteHamiltonian& H, const GreenQuery& q)
{
    require_upper_half_plane(q.z);
    std::set<Eigen::Index> columns;
    for (const auto& [n, m] : q.pairs) {
        if (n < 0 || n >= H.size() || m < 0 || m >= H.size())
            throw DomainError("site index outside box");
        columns.insert(m);
    }
    GreenEntries entries;
    if (H.is_chain()) {
        for (Eigen::Index m : columns) {
            const Eigen::VectorXcd col = green_column(H, q.z, m);
            for (const auto& [n, mm] : q.pairs)
                if (mm == m)
                    entries[{n, m}] = col[n];
        }
        return entries;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
    lu.compute(shifted_complex(H, q.z));
    if (lu.info() != Eigen::Success)
        throw NumericalError("sparse LU failed on " + provenance(H));
    for (Eigen::Index m : columns) {
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(H.size());
        rhs[m] = 1.0;
        const Eigen::VectorXcd col = lu.solve(rhs);
        for (const auto& [n, mm] : q.pairs)
            if (mm == m)
                entries[{n, m}] = col[n];
    }
    return entries;
}

} // namespace anderson
