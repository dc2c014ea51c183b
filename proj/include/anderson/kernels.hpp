#pragma once

// Scalar-templated kernels used by the spectral engine: eigenvalue counting by
// Sylvester inertia and pivoted tridiagonal solves.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace anderson {

// Smallest pivot magnitude tolerated in an LDL^T sweep of a matrix of norm `scale`.
template <typename Scalar>
Scalar pivot_floor(Scalar scale)
{
    return std::numeric_limits<Scalar>::epsilon() * Scalar(1e-2) * (Scalar(1) + scale);
}

// Number of eigenvalues < shift of the symmetric tridiagonal matrix with the
// given diagonal and off-diagonal (Sturm sequence = inertia of T - shift).
template <typename DiagDerived, typename OffDerived>
Eigen::Index sturm_count_below(const Eigen::MatrixBase<DiagDerived>& diag, const Eigen::MatrixBase<OffDerived>& off,
                               typename DiagDerived::Scalar shift)
{
    using Scalar = typename DiagDerived::Scalar;
    const Eigen::Index n = diag.size();
    const Scalar scale = diag.cwiseAbs().maxCoeff() + Scalar(2) * (off.size() ? off.cwiseAbs().maxCoeff() : Scalar(0));
    const Scalar floor = pivot_floor(scale);
    Eigen::Index negatives = 0;
    Scalar pivot = diag[0] - shift;
    for (Eigen::Index i = 0;; ++i) {
        if (std::abs(pivot) < floor)
            pivot = -floor;
        if (pivot < Scalar(0))
            ++negatives;
        if (i + 1 == n)
            break;
        pivot = (diag[i + 1] - shift) - off[i] * off[i] / pivot;
    }
    return negatives;
}

// Number of eigenvalues < shift of a symmetric banded sparse matrix: the count
// of negative pivots of an unpivoted band LDL^T factorization of A - shift.
template <typename Scalar>
Eigen::Index banded_count_below(const Eigen::SparseMatrix<Scalar>& A, Eigen::Index bandwidth, Scalar shift)
{
    const Eigen::Index n = A.rows();
    const Eigen::Index b = bandwidth;
    // band(i, k) = entry (i, i - k), k = 0..b.
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> band =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, b + 1);
    Scalar scale(0);
    for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
        for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, col); it; ++it) {
            const Eigen::Index row = it.row();
            if (row >= col && row - col <= b)
                band(row, row - col) = it.value();
            scale = std::max(scale, std::abs(it.value()));
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        band(i, 0) -= shift;
    scale += std::abs(shift);
    const Scalar floor = pivot_floor(scale);

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pivots(n);
    Eigen::Index negatives = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index first = std::max<Eigen::Index>(0, i - b);
        // Row i of L overwrites band(i, 1..b).
        for (Eigen::Index j = first; j < i; ++j) {
            Scalar s = band(i, i - j);
            for (Eigen::Index k = first; k < j; ++k)
                s -= band(i, i - k) * pivots[k] * band(j, j - k);
            band(i, i - j) = s / pivots[j];
        }
        Scalar d = band(i, 0);
        for (Eigen::Index k = first; k < i; ++k)
            d -= band(i, i - k) * band(i, i - k) * pivots[k];
        if (std::abs(d) < floor)
            d = -floor;
        pivots[i] = d;
        if (d < Scalar(0))
            ++negatives;
    }
    return negatives;
}

// Solves the tridiagonal system with sub-diagonal `lower`, diagonal `diag`,
// super-diagonal `upper` by Gaussian elimination with partial pivoting.
// Exactly singular pivots are replaced by `tiny` (inverse iteration relies on it).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_tridiagonal(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lower,
                                                           Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diag,
                                                           Eigen::Matrix<Scalar, Eigen::Dynamic, 1> upper,
                                                           Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs,
                                                           typename Eigen::NumTraits<Scalar>::Real tiny = 0)
{
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    const Eigen::Index n = diag.size();
    if (tiny <= Real(0))
        tiny = std::numeric_limits<Real>::min() / std::numeric_limits<Real>::epsilon();
    // Second super-diagonal created by row swaps.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> upper2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(std::max<Eigen::Index>(n, 1));
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (std::abs(lower[i]) > std::abs(diag[i])) {
            std::swap(diag[i], lower[i]);
            // Row i+1 entries: (lower[i], diag[i+1], upper[i+1]) vs row i: (diag[i], upper[i], 0).
            std::swap(upper[i], diag[i + 1]);
            if (i + 2 < n) {
                upper2[i] = upper[i + 1];
                upper[i + 1] = Scalar(0);
            }
            std::swap(rhs[i], rhs[i + 1]);
        }
        if (std::abs(diag[i]) < tiny)
            diag[i] = Scalar(tiny);
        const Scalar factor = lower[i] / diag[i];
        diag[i + 1] -= factor * upper[i];
        if (i + 2 < n)
            upper[i + 1] -= factor * upper2[i];
        rhs[i + 1] -= factor * rhs[i];
    }
    if (std::abs(diag[n - 1]) < tiny)
        diag[n - 1] = Scalar(tiny);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        Scalar s = rhs[i];
        if (i + 1 < n)
            s -= upper[i] * x[i + 1];
        if (i + 2 < n)
            s -= upper2[i] * x[i + 2];
        x[i] = s / diag[i];
    }
    return x;
}

} // namespace anderson
