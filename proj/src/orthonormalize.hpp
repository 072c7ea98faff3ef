#pragma once

// Internal helper shared by the Gaussian engines: restore a tall frame to an
// isometry by QR with the positive-diagonal-R convention, i.e. frame <-
// frame * R^{-1}. This is the unique isometry with the same column span and
// upper-triangular positive connecting factor, so results are gauge-fixed
// and bit-reproducible.

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "ftraj/errors.hpp"

namespace ftraj {

inline void orthonormalize_columns(Eigen::MatrixXcd& frame) {
    using Eigen::MatrixXcd;
    const Eigen::Index N = frame.cols();
    // Fast path: Cholesky QR (Gram = R^dag R, positive diagonal by
    // construction). A near-singular Gram can pass the factorization yet
    // destroy the frame, so the result is verified before committing.
    MatrixXcd gram = frame.adjoint() * frame;
    Eigen::LLT<MatrixXcd> llt(gram);
    if (llt.info() == Eigen::Success) {
        MatrixXcd candidate = frame;
        llt.matrixU().solveInPlace<Eigen::OnTheRight>(candidate);
        const double defect =
            (candidate.adjoint() * candidate - MatrixXcd::Identity(N, N))
                .cwiseAbs()
                .maxCoeff();
        if (std::isfinite(defect) && defect < 1e-12) {
            frame = std::move(candidate);
            return;
        }
    }
    // Fallback: Householder QR with explicit sign fixing. A diagonal entry
    // of R far below the dominant one means the frame lost rank.
    Eigen::HouseholderQR<MatrixXcd> qr(frame);
    MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(frame.rows(), N);
    const MatrixXcd R = qr.matrixQR().topRows(N);
    double scale = 0.0;
    for (Eigen::Index k = 0; k < N; ++k)
        scale = std::max(scale, std::abs(R(k, k)));
    for (Eigen::Index k = 0; k < N; ++k) {
        const std::complex<double> r = R(k, k);
        const double a = std::abs(r);
        if (!std::isfinite(a) || !(a > 1e-12 * scale))
            throw NumericalBreakdown("frame is numerically singular");
        Q.col(k) *= r / a;
    }
    frame = Q;
}

}  // namespace ftraj
