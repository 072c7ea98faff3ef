#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ftraj/errors.hpp"

namespace ftraj {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXd = Eigen::VectorXd;
using VectorXcd = Eigen::VectorXcd;

// Occupation spectrum of a restricted correlation matrix. For a
// number-conserving (u1) state these are the eigenvalues of the l x l block
// of <c_i^dag c_j>; for a paired state they come from the 2l x 2l Nambu
// block and appear in (lambda, 1-lambda) pairs, so the entropy sum double
// counts and must be halved.
struct CorrelationSpectrum {
    enum class Kind { U1Restricted, NambuRestricted };
    std::vector<double> eigenvalues;  // clamped to [0,1]
    Kind kind = Kind::U1Restricted;
};

// Eigen-solvers can return values slightly outside [0,1]; clamp within eps,
// reject anything worse. eps = 1e-12.
double clamp_occupation(double lambda, double eps = 1e-12);

// x ln x with the 0 ln 0 := 0 convention.
double xlogx(double x);

// S = -sum[ lambda ln lambda + (1-lambda) ln(1-lambda) ], halved for
// Nambu-restricted spectra.
double entropy_from_spectrum(const CorrelationSpectrum& spectrum);

// Principal l x l submatrix of a Hermitian correlation matrix, diagonalized
// and clamped. Rejects visibly non-Hermitian input (defect > 1e-8).
CorrelationSpectrum restrict_and_diagonalize(const MatrixXcd& correlation,
                                             int l);

// Same for a paired state: builds the 2l x 2l Nambu block
//   [[ G_A, F_A^dag ], [ F_A, 1 - G_A^T ]]
// from G = <c^dag c> and F = <c c> restricted to the first l sites.
CorrelationSpectrum restrict_and_diagonalize_nambu(const MatrixXcd& G,
                                                   const MatrixXcd& F, int l);

// Occupation entropy of an already-clamped spectrum given as a vector.
double entropy_u1(const std::vector<double>& occupations);

}  // namespace ftraj
