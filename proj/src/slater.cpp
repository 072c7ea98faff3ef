#include "ftraj/slater.hpp"

#include <cmath>

#include "orthonormalize.hpp"

namespace ftraj {

MatrixXcd HoppingHamiltonian::matrix() const {
    MatrixXcd h = MatrixXcd::Zero(L, L);
    for (int j = 0; j < L; ++j) {
        const int jp = (j + 1) % L;
        h(j, jp) += -0.5 * J;
        h(jp, j) += -0.5 * J;
    }
    return h;
}

SlaterState init_neel(int L) {
    if (L % 2 != 0) throw OddSize("init_neel: L must be even");
    SlaterState state;
    state.orbitals = MatrixXcd::Zero(L, L / 2);
    // Even sites occupied (1-based), i.e. odd 0-based indices.
    for (int k = 0; k < L / 2; ++k) state.orbitals(2 * k + 1, k) = 1.0;
    return state;
}

MatrixXcd hopping_propagator(const HoppingHamiltonian& H, double dt) {
    const int L = H.L;
    // Circulant: first column c_d = (1/L) sum_m e^{i k_m d} e^{-i eps_m dt},
    // eps_m = -J cos k_m, k_m = 2 pi m / L.
    std::vector<Complex> col(L, Complex(0, 0));
    for (int m = 0; m < L; ++m) {
        const double k = 2.0 * M_PI * m / L;
        const double eps = -H.J * std::cos(k);
        const Complex phase = std::exp(Complex(0, -eps * dt));
        for (int d = 0; d < L; ++d)
            col[d] += phase * std::exp(Complex(0, k * d));
    }
    MatrixXcd P(L, L);
    for (int j = 0; j < L; ++j)
        for (int l = 0; l < L; ++l) P(j, l) = col[(j - l + L) % L] / double(L);
    return P;
}

void unitary_step(SlaterState& state, const MatrixXcd& propagator) {
    state.orbitals = propagator * state.orbitals;
}

void unitary_step(SlaterState& state, const HoppingHamiltonian& H, double dt) {
    unitary_step(state, hopping_propagator(H, dt));
}

VectorXd densities(const SlaterState& state) {
    return state.orbitals.rowwise().squaredNorm();
}

MatrixXcd correlation_matrix(const SlaterState& state) {
    // <c_i^dag c_j> = conj(U U^dag)_ij
    return (state.orbitals * state.orbitals.adjoint()).conjugate();
}

double isometry_defect(const SlaterState& state) {
    const int N = state.particles();
    return (state.orbitals.adjoint() * state.orbitals -
            MatrixXcd::Identity(N, N))
        .cwiseAbs()
        .maxCoeff();
}

void reorthonormalize(SlaterState& state) {
    orthonormalize_columns(state.orbitals);
}

void measurement_step(SlaterState& state, std::span<const double> increments,
                      double gamma, double dt,
                      std::span<const double> density_pre) {
    const int L = state.sites();
    for (int j = 0; j < L; ++j) {
        const double alpha =
            increments[j] + (2.0 * density_pre[j] - 1.0) * gamma * dt;
        state.orbitals.row(j) *= std::exp(alpha);
    }
    reorthonormalize(state);
}

void measurement_step(SlaterState& state, std::span<const double> increments,
                      double gamma, double dt) {
    const VectorXd n = densities(state);
    measurement_step(state, increments, gamma, dt,
                     std::span<const double>(n.data(), n.size()));
}

TightBindingEngine::TightBindingEngine(int L, double J, double gamma,
                                       double dt, int defect_check_stride)
    : state_(init_neel(L)),
      propagator_(hopping_propagator({J, L}, dt)),
      gamma_(gamma),
      dt_(dt),
      defect_check_stride_(defect_check_stride) {}

void TightBindingEngine::advance(NoiseStream& noise) {
    const int L = state_.sites();
    const VectorXd n_pre = densities(state_);
    const auto dw = wiener_increments(noise, L, gamma_, dt_);
    unitary_step(state_, propagator_);
    measurement_step(state_, dw, gamma_, dt_,
                     std::span<const double>(n_pre.data(), n_pre.size()));
    ++step_count_;
    if (defect_check_stride_ > 0 && step_count_ % defect_check_stride_ == 0) {
        if (isometry_defect(state_) > 1e-10)
            throw NumericalBreakdown(
                "Slater isometry defect above 1e-10 (dt too large?)");
    }
}

void TightBindingEngine::observe(std::span<const ObservableSpec> what,
                                 std::span<double> out) const {
    const MatrixXcd* corr = nullptr;
    MatrixXcd corr_storage;
    auto correlation = [&]() -> const MatrixXcd& {
        if (!corr) {
            corr_storage = correlation_matrix(state_);
            corr = &corr_storage;
        }
        return *corr;
    };
    for (std::size_t i = 0; i < what.size(); ++i) {
        switch (what[i].kind) {
            case ObservableSpec::Kind::EntropyCut:
                out[i] = entropy_from_spectrum(
                    restrict_and_diagonalize(correlation(), what[i].index));
                break;
            case ObservableSpec::Kind::Density:
                out[i] = correlation()(what[i].index - 1, what[i].index - 1)
                             .real();
                break;
            case ObservableSpec::Kind::Parity:
                // Number-conserving sector: parity fixed by N.
                out[i] = state_.particles() % 2 == 0 ? 1.0 : -1.0;
                break;
            default:
                throw EngineError("observable '" + what[i].name +
                                  "' not available for tight-binding engine");
        }
    }
}

}  // namespace ftraj
