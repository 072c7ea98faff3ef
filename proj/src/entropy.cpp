#include "ftraj/entropy.hpp"

#include <cmath>

namespace ftraj {

namespace {
constexpr double kClampEps = 1e-12;
constexpr double kNambuClampEps = 1e-9;
}

double clamp_occupation(double lambda, double eps) {
    if (lambda < 0.0) {
        if (lambda < -eps)
            throw SpectrumOutOfRange("correlation eigenvalue below 0 beyond tolerance");
        return 0.0;
    }
    if (lambda > 1.0) {
        if (lambda > 1.0 + eps)
            throw SpectrumOutOfRange("correlation eigenvalue above 1 beyond tolerance");
        return 1.0;
    }
    return lambda;
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double entropy_from_spectrum(const CorrelationSpectrum& spectrum) {
    double s = 0.0;
    for (double lambda : spectrum.eigenvalues) {
        const double l = clamp_occupation(lambda);
        s -= xlogx(l) + xlogx(1.0 - l);
    }
    if (spectrum.kind == CorrelationSpectrum::Kind::NambuRestricted) s *= 0.5;
    return s;
}

double entropy_u1(const std::vector<double>& occupations) {
    CorrelationSpectrum spec{occupations, CorrelationSpectrum::Kind::U1Restricted};
    return entropy_from_spectrum(spec);
}

namespace {

CorrelationSpectrum diagonalize_hermitian(const MatrixXcd& block,
                                          CorrelationSpectrum::Kind kind,
                                          double eps) {
    const double defect = (block - block.adjoint()).cwiseAbs().maxCoeff();
    if (defect > 1e-8)
        throw SpectrumOutOfRange("correlation block is not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(
        0.5 * (block + block.adjoint()), Eigen::EigenvaluesOnly);
    CorrelationSpectrum spec;
    spec.kind = kind;
    spec.eigenvalues.reserve(block.rows());
    for (Eigen::Index i = 0; i < block.rows(); ++i)
        spec.eigenvalues.push_back(
            clamp_occupation(solver.eigenvalues()[i], eps));
    return spec;
}

}  // namespace

CorrelationSpectrum restrict_and_diagonalize(const MatrixXcd& correlation,
                                             int l) {
    if (l < 1 || l >= correlation.rows())
        throw ConfigError("restriction length out of range");
    return diagonalize_hermitian(correlation.topLeftCorner(l, l),
                                 CorrelationSpectrum::Kind::U1Restricted,
                                 kClampEps);
}

CorrelationSpectrum restrict_and_diagonalize_nambu(const MatrixXcd& G,
                                                   const MatrixXcd& F, int l) {
    if (l < 1 || l >= G.rows())
        throw ConfigError("restriction length out of range");
    MatrixXcd block(2 * l, 2 * l);
    block.topLeftCorner(l, l) = G.topLeftCorner(l, l);
    block.topRightCorner(l, l) = F.topLeftCorner(l, l).adjoint();
    block.bottomLeftCorner(l, l) = F.topLeftCorner(l, l);
    block.bottomRightCorner(l, l) =
        MatrixXcd::Identity(l, l) - G.topLeftCorner(l, l).transpose();
    // Frames are only kept unitary to 1e-9, so the paired spectrum may
    // stray further outside [0,1] than the u1 one.
    return diagonalize_hermitian(block,
                                 CorrelationSpectrum::Kind::NambuRestricted,
                                 kNambuClampEps);
}

}  // namespace ftraj
