#pragma once

#include <span>

#include "ftraj/ensemble.hpp"
#include "ftraj/entropy.hpp"
#include "ftraj/noise.hpp"

namespace ftraj {

// Half-filled U(1) trajectory state: L x N isometry whose columns are the
// occupied orbitals. The evolved state is the Slater determinant of the
// columns; every operation must keep U^dag U = 1 to 1e-10.
struct SlaterState {
    MatrixXcd orbitals;  // L x N

    int sites() const { return static_cast<int>(orbitals.rows()); }
    int particles() const { return static_cast<int>(orbitals.cols()); }
};

// Nearest-neighbor hopping ring, H = -(J/2) sum_j (c_j^dag c_{j+1} + h.c.).
struct HoppingHamiltonian {
    double J = 1.0;
    int L = 0;

    // Single-particle matrix (Hermitian, circulant).
    MatrixXcd matrix() const;
};

// Staggered initial state: even sites (1-based; 2, 4, ...) occupied.
SlaterState init_neel(int L);

// exp(-i h dt) for the circulant hopping matrix, assembled from its Fourier
// eigenmodes (single-particle energies -J cos k): exact, no Pade/squaring,
// O(L^2) to build. Rebuild only when J*dt changes.
MatrixXcd hopping_propagator(const HoppingHamiltonian& H, double dt);

// orbitals <- exp(-i h dt) orbitals. Isometry is preserved by unitarity;
// no re-orthonormalization here.
void unitary_step(SlaterState& state, const MatrixXcd& propagator);
void unitary_step(SlaterState& state, const HoppingHamiltonian& H, double dt);

// Occupations <n_j> (diagonal of the correlation matrix, real).
VectorXd densities(const SlaterState& state);

// Measurement factor of the diffusion step for m_j = n_j (so q_j = 1):
// row j of the orbitals is scaled by exp(dW_j + (2<n_j> - 1) gamma dt) and
// the frame re-orthonormalized by QR with positive-diagonal R. The
// expectation values enter at the state reached *before* the unitary factor
// of the same composite step; pass them via `density_pre`. The two-argument
// overload evaluates them on `state` itself (correct when no unitary factor
// is interleaved).
void measurement_step(SlaterState& state, std::span<const double> increments,
                      double gamma, double dt,
                      std::span<const double> density_pre);
void measurement_step(SlaterState& state, std::span<const double> increments,
                      double gamma, double dt);

// D_ij = <c_i^dag c_j>; Hermitian, eigenvalues in [0,1], trace = N.
MatrixXcd correlation_matrix(const SlaterState& state);

double isometry_defect(const SlaterState& state);

// QR with positive-diagonal R (Cholesky form with Householder fallback).
// Throws NumericalBreakdown if the frame cannot be restored to an isometry.
void reorthonormalize(SlaterState& state);

// Trajectory engine: one advance() = unitary factor, then measurement
// factor with pre-step expectations, then QR. The isometry defect is
// verified every `defect_check_stride` steps (1 = every step).
class TightBindingEngine : public Engine {
  public:
    TightBindingEngine(int L, double J, double gamma, double dt,
                       int defect_check_stride = 1);

    void advance(NoiseStream& noise) override;
    void observe(std::span<const ObservableSpec> what,
                 std::span<double> out) const override;

    const SlaterState& state() const { return state_; }
    SlaterState& state() { return state_; }

  private:
    SlaterState state_;
    MatrixXcd propagator_;
    double gamma_;
    double dt_;
    int defect_check_stride_;
    long step_count_ = 0;
};

}  // namespace ftraj
