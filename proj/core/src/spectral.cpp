#include "hest/spectral.hpp"

#include <lapacke.h>

#include <cmath>
#include <string>

namespace hest {

namespace {

// LAPACK's selector callback has no user-data parameter; the active
// threshold is stashed per thread for the duration of the dgees call.
thread_local double g_stable_modulus_bound = 1.0;

lapack_logical select_stable(const double* re, const double* im) {
    return std::hypot(*re, *im) < g_stable_modulus_bound ? 1 : 0;
}

} // namespace

SpectralSplit spectral_split(const MatrixXd& A, const MatrixXd& C, double circle_tol) {
    if (A.rows() != A.cols()) throw DimensionError("spectral_split: A must be square");
    if (C.cols() != A.rows()) throw DimensionError("spectral_split: C must have n columns");
    if (circle_tol < 0.0 || circle_tol >= 1.0) {
        throw ConfigError("spectral_split: circle_tol must lie in [0, 1)");
    }
    const auto n = static_cast<lapack_int>(A.rows());

    MatrixXd schur_form = A; // overwritten with the quasi-triangular factor
    MatrixXd schur_vectors(n, n);
    Eigen::VectorXd eig_re(n), eig_im(n);
    lapack_int stable_count = 0;

    g_stable_modulus_bound = 1.0 - circle_tol;
    const lapack_int info =
        LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_stable, n, schur_form.data(), n,
                      &stable_count, eig_re.data(), eig_im.data(), schur_vectors.data(), n);
    if (info != 0) {
        throw ConfigError("spectral_split: ordered Schur factorization failed (info=" +
                          std::to_string(info) + ")");
    }

    const lapack_int k = stable_count;
    const lapack_int r = n - k;

    SpectralSplit split;
    split.circle_tol = circle_tol;
    split.schur_vectors = schur_vectors;
    split.stable_block = schur_form.topLeftCorner(k, k);
    split.unstable_block = schur_form.bottomRightCorner(r, r);

    // Zero the coupling block: with W = [I X; 0 I] and A_s X - X A_us = -T_su,
    // W^-1 T W is block diagonal.
    MatrixXd coupling = MatrixXd::Zero(k, r);
    if (k > 0 && r > 0) {
        MatrixXd rhs = -schur_form.topRightCorner(k, r);
        double scale = 1.0;
        const lapack_int sy_info = LAPACKE_dtrsyl(
            LAPACK_COL_MAJOR, 'N', 'N', -1, k, r, split.stable_block.data(), k,
            split.unstable_block.data(), r, rhs.data(), k, &scale);
        if (sy_info < 0 || scale == 0.0) {
            throw ConfigError("spectral_split: Sylvester decoupling failed");
        }
        coupling = rhs / scale;
    }

    MatrixXd decoupling = MatrixXd::Identity(n, n);
    MatrixXd decoupling_inv = MatrixXd::Identity(n, n);
    decoupling.topRightCorner(k, r) = coupling;
    decoupling_inv.topRightCorner(k, r) = -coupling;

    split.decoupling = decoupling;
    split.transform = schur_vectors * decoupling;
    split.inverse_transform = decoupling_inv * schur_vectors.transpose();

    const MatrixXd c_transformed = C * split.transform;
    split.stable_output = c_transformed.leftCols(k);
    split.unstable_output = c_transformed.rightCols(r);

    for (lapack_int i = 0; i < n; ++i) {
        const std::complex<double> lambda(eig_re[i], eig_im[i]);
        if (i < k) {
            split.stable_eigenvalues.push_back(lambda);
        } else {
            split.unstable_eigenvalues.push_back(lambda);
        }
    }
    return split;
}

DetectabilityVerdict unstable_check(const MatrixXd& A, const MatrixXd& C, const GapSequence& gaps,
                                    Time T, double circle_tol, double rank_tol) {
    DetectabilityVerdict verdict;
    verdict.split = spectral_split(A, C, circle_tol);
    if (verdict.split.unstable_dim() == 0) {
        verdict.detectable = true; // fully stable spectrum: incremental ISS alone suffices
        return verdict;
    }
    verdict.detectable = rolling_window_check(verdict.split.unstable_block,
                                              verdict.split.unstable_output, gaps, T, rank_tol);
    return verdict;
}

} // namespace hest
