#pragma once

#include <complex>
#include <vector>

#include "hest/observability.hpp"

namespace hest {

/// Block-diagonal separation of a linear system into its strictly stable
/// and its marginal/unstable part:
///
///   A = V * blkdiag(A_stable, A_unstable) * V^-1,   [C_stable C_unstable] = C * V
///
/// with V the product of an orthogonal Schur transform and a unit
/// upper-triangular decoupling transform. Eigenvalues with modulus within
/// circle_tol of the unit circle are assigned to the unstable block.
struct SpectralSplit {
    MatrixXd schur_vectors;     // orthogonal similarity
    MatrixXd decoupling;        // unit upper-triangular block transform
    MatrixXd transform;         // V = schur_vectors * decoupling
    MatrixXd inverse_transform; // V^-1
    MatrixXd stable_block;      // strictly stable eigenvalues
    MatrixXd unstable_block;    // modulus >= 1 - circle_tol
    MatrixXd stable_output;
    MatrixXd unstable_output;
    std::vector<std::complex<double>> stable_eigenvalues;
    std::vector<std::complex<double>> unstable_eigenvalues;
    double circle_tol = 0.0;

    Eigen::Index stable_dim() const { return stable_block.rows(); }
    Eigen::Index unstable_dim() const { return unstable_block.rows(); }
};

/// Ordered real Schur factorization with the stable eigenvalues leading,
/// followed by a Sylvester-equation decoupling of the off-diagonal block.
SpectralSplit spectral_split(const MatrixXd& A, const MatrixXd& C, double circle_tol = 1e-9);

struct DetectabilityVerdict {
    bool detectable = false;
    SpectralSplit split;
};

/// Sample-based detectability test: the system passes when the rolling
/// observability check holds for the unstable subsystem alone (trivially
/// true when the spectrum is entirely stable). A true verdict certifies the
/// exponential incremental IOSS property with respect to the sampling
/// family; no numeric certificate matrices are constructed.
DetectabilityVerdict unstable_check(const MatrixXd& A, const MatrixXd& C, const GapSequence& gaps,
                                    Time T, double circle_tol = 1e-9, double rank_tol = 1e4);

} // namespace hest
