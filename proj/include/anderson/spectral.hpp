#pragma once

#include <complex>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "anderson/lattice.hpp"

namespace anderson {

// Dense eigensolves are refused above this many sites; counting still works.
inline constexpr Eigen::Index kDenseEigenLimit = 4000;

// Eigenvalues in ascending order with (optionally) the orthonormal
// eigenvectors as columns. A windowed spectrum holds only the pairs whose
// eigenvalue lies in the requested window.
struct SpectralData {
    BoxGeometry geometry;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    Eigen::Index size() const { return eigenvalues.size(); }
    bool has_vectors() const { return eigenvectors.cols() == eigenvalues.size() && eigenvectors.size() > 0; }
    // |psi_j(n)|^2 for every stored j.
    Eigen::VectorXd weights(Eigen::Index site) const;
};

// Full symmetric eigendecomposition (tridiagonal QR for chains).
// Throws ResourceError above kDenseEigenLimit, NumericalError on non-convergence.
SpectralData eigensolve(const FiniteHamiltonian& H, bool with_vectors = true);

// Eigenpairs with eigenvalue in [lo, hi). Chains use Sturm bisection and
// inverse iteration (cost linear in |B| per eigenpair); other boxes fall back
// to the dense solver.
SpectralData window_spectrum(const FiniteHamiltonian& H, double lo, double hi);

// #{j : E_j in [lo, hi)}.
Eigen::Index count_in_window(const SpectralData& S, double lo, double hi);

// Same count from the inertia of H - lo and H - hi; no eigenvectors needed.
Eigen::Index count_in_window(const FiniteHamiltonian& H, double lo, double hi);

// #{j : E_j < E} by Sylvester inertia.
Eigen::Index count_below(const FiniteHamiltonian& H, double E);

// sum_{j : E_j in [lo,hi)} sum_{n in sites} |psi_j(n)|^2. Sites are linear
// indices of S.geometry; throws DomainError for out-of-range sites.
double local_weight(const SpectralData& S, double lo, double hi, std::span<const Eigen::Index> sites);

struct GreenQuery {
    std::complex<double> z;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
};

using GreenEntries = std::map<std::pair<Eigen::Index, Eigen::Index>, std::complex<double>>;

// Column m of (H - z)^{-1}. Throws DomainError unless Im z > 0.
Eigen::VectorXcd green_column(const FiniteHamiltonian& H, std::complex<double> z, Eigen::Index m);

// Requested resolvent entries, one linear solve per distinct column m.
GreenEntries green(const FiniteHamiltonian& H, const GreenQuery& q);

} // namespace anderson
