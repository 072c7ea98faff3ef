#include <doctest.h>

#include <cmath>

#include "ftraj/entropy.hpp"
#include "ftraj/noise.hpp"
#include "oracle_fock.hpp"

using namespace ftraj;

namespace {

// Random L x N isometry built from noise-stream gaussians (deterministic).
MatrixXcd random_isometry(int L, int N, std::uint64_t seed) {
    NoiseStream s(seed, 0);
    MatrixXcd A(L, N);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < N; ++j) A(i, j) = Complex(s.gaussian(), s.gaussian());
    Eigen::HouseholderQR<MatrixXcd> qr(A);
    return qr.householderQ() * MatrixXcd::Identity(L, N);
}

}  // namespace

TEST_SUITE_BEGIN("entropy");

TEST_CASE("x ln x and clamping") {
    CHECK(xlogx(0.0) == 0.0);
    CHECK(xlogx(1.0) == 0.0);
    CHECK(xlogx(0.5) == doctest::Approx(0.5 * std::log(0.5)));
    CHECK(clamp_occupation(0.5) == 0.5);
    CHECK(clamp_occupation(-5e-13) == 0.0);
    CHECK(clamp_occupation(1.0 + 5e-13) == 1.0);
    CHECK_THROWS_AS(clamp_occupation(-1e-6), SpectrumOutOfRange);
    CHECK_THROWS_AS(clamp_occupation(1.0 + 1e-6), SpectrumOutOfRange);
}

TEST_CASE("entropy of trivial spectra") {
    CHECK(entropy_u1({0.0, 1.0, 1.0, 0.0}) == 0.0);
    CHECK(entropy_u1({0.5}) == doctest::Approx(std::log(2.0)));
    CHECK(entropy_u1({0.5, 0.5}) == doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("restricted diagonalization rejects non-Hermitian input") {
    MatrixXcd bad = MatrixXcd::Zero(3, 3);
    bad(0, 1) = 1.0;  // bad(1,0) stays 0, defect = 1
    CHECK_THROWS_AS(restrict_and_diagonalize(bad, 2), SpectrumOutOfRange);
}

TEST_CASE("product-state correlation has zero entropy at any cut") {
    MatrixXcd corr = MatrixXcd::Zero(6, 6);
    corr(1, 1) = corr(3, 3) = corr(5, 5) = 1.0;
    for (int l = 1; l < 6; ++l)
        CHECK(entropy_from_spectrum(restrict_and_diagonalize(corr, l)) ==
              doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pure-state entropy is symmetric under complementation") {
    const int L = 8, N = 4;
    const MatrixXcd U = random_isometry(L, N, 31);
    const MatrixXcd D = (U * U.adjoint()).conjugate();
    for (int l = 1; l < L; ++l) {
        const double s_a =
            entropy_from_spectrum(restrict_and_diagonalize(D, l));
        // Complement block: reverse the site order so the complement is
        // again a leading principal block.
        MatrixXcd Dr = D.colwise().reverse().rowwise().reverse();
        const double s_b =
            entropy_from_spectrum(restrict_and_diagonalize(Dr, L - l));
        CHECK(s_a == doctest::Approx(s_b).epsilon(1e-9));
    }
}

TEST_CASE("correlation entropy matches the dense reduced-density entropy") {
    const int L = 6, N = 3;
    const MatrixXcd U = random_isometry(L, N, 77);
    const MatrixXcd D = (U * U.adjoint()).conjugate();
    const oracle::Vec psi = oracle::slater_to_fock(L, U);
    REQUIRE(std::abs(psi.norm() - 1.0) < 1e-12);
    for (int l = 1; l < L; ++l) {
        const double s_corr =
            entropy_from_spectrum(restrict_and_diagonalize(D, l));
        const double s_fock = oracle::statevector_entropy(L, psi, l);
        CHECK(s_corr == doctest::Approx(s_fock).epsilon(1e-9));
    }
}

TEST_CASE("paired-state spectrum pairs as (lambda, 1-lambda)") {
    // Antisymmetric pairing amplitude; state exp(1/2 Z c^dag c^dag)|0>.
    const int n = 4;
    NoiseStream s(5, 0);
    oracle::Mat Z = oracle::Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            Z(i, j) = 0.5 * Complex(s.gaussian(), s.gaussian());
            Z(j, i) = -Z(i, j);
        }
    const oracle::Vec psi = oracle::pair_state_to_fock(n, Z);
    const oracle::Mat G = oracle::correlation_G(n, psi);
    const oracle::Mat F = oracle::correlation_F(n, psi);

    const int l = 2;
    auto spectrum = restrict_and_diagonalize_nambu(G, F, l);
    REQUIRE(spectrum.eigenvalues.size() == std::size_t(2 * l));
    REQUIRE(spectrum.kind == CorrelationSpectrum::Kind::NambuRestricted);
    // Sorted ascending by the eigensolver: lambda_k + lambda_{2l-1-k} = 1.
    for (int k = 0; k < l; ++k)
        CHECK(spectrum.eigenvalues[k] +
                  spectrum.eigenvalues[2 * l - 1 - k] ==
              doctest::Approx(1.0).epsilon(1e-9));

    // And the halved entropy equals the dense reduced-density entropy.
    const double s_nambu = entropy_from_spectrum(spectrum);
    const double s_fock = oracle::statevector_entropy(n, psi, l);
    CHECK(s_nambu == doctest::Approx(s_fock).epsilon(1e-8));
}

TEST_SUITE_END();
