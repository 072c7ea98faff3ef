#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ftraj/ensemble.hpp"
#include "ftraj/entropy.hpp"
#include "ftraj/errors.hpp"
#include "ftraj/noise.hpp"
#include "ftraj/observable.hpp"

namespace ftraj {

using SparseMatrixXcd = Eigen::SparseMatrix<Complex>;

// Half-filling sector of L sites (N = L/2 particles): the list of bitstring
// configurations with popcount N in increasing numeric order, plus O(N)
// rank/unrank maps through the combinatorial number system. Bit j of a
// configuration is the occupation of site j; basis states are built by
// applying creation operators in increasing site order (the one sign
// convention shared by every routine in this module).
class SectorBasis {
  public:
    SectorBasis(int L, int N);

    int sites() const { return L_; }
    int particles() const { return N_; }
    std::int64_t dim() const { return static_cast<std::int64_t>(configs_.size()); }

    std::uint32_t unrank(std::int64_t index) const { return configs_[index]; }
    std::int64_t rank(std::uint32_t config) const;

    const std::vector<std::uint32_t>& configs() const { return configs_; }

  private:
    int L_;
    int N_;
    std::vector<std::uint32_t> configs_;
};

SectorBasis half_filling_basis(int L);

// Staggered interacting chain in the half-filling sector, periodic:
//   sum_j [ -t/2 (c_j^dag c_{j+1} + h.c.) + W (-1)^j n_j
//           + V (n_j - 1/2)(n_{j+1} - 1/2) ]
// with 1-based j in the staggered sign. Fermionic signs follow the ordered
// bitstring convention of SectorBasis. L even and at most 22 (SizeLimit).
SparseMatrixXcd build_tv_hamiltonian(int L, double t, double W, double V);

// Random four-fermion couplings J_{ij,kl} with the pair symmetries
//   J_{ij,kl} = -J_{ji,kl} = -J_{ij,lk},   J_{ij,kl} = conj(J_{kl,ij}),
// stored on the canonical ordered pairs (i<j, k<l) as a Hermitian matrix.
// Off-diagonal canonical entries are complex Gaussians with
// <|J|^2> = variance; the Hermitian constraint forces the diagonal real, so
// those entries are real Gaussians of the same total variance.
struct SykCouplings {
    int L = 0;
    double J = 1.0;  // sqrt of the variance <|J_{ij,kl}|^2>
    std::uint64_t seed = 0;
    std::vector<std::pair<int, int>> pairs;  // canonical (i<j), lexicographic
    MatrixXcd tensor;                        // pair-indexed, Hermitian

    int pair_index(int i, int j) const;  // requires i < j
    // Full tensor entry for arbitrary indices (0 when i==j or k==l).
    Complex element(int i, int j, int k, int l) const;
};

SykCouplings sample_syk_couplings(int L, double J, std::uint64_t seed);

// H = L^{-3/2} sum_{ijkl} J_{ij,kl} c_i^dag c_j^dag c_k c_l restricted to the
// half-filling sector. Hermitian and number conserving by construction.
// L at most 20 and even (SizeLimit / OddSize).
SparseMatrixXcd build_syk_hamiltonian(const SykCouplings& couplings);

// psi' ~= exp(-i H dt) psi via a Lanczos subspace grown until the a
// posteriori estimate (first neglected term) drops below tol; the result is
// renormalized. Throws NoConvergence when m_max vectors are not enough.
VectorXcd krylov_propagate(const SparseMatrixXcd& H, const VectorXcd& psi,
                           double dt, double tol = 1e-12, int m_max = 30);

// Diagonal measurement factor: the amplitude of configuration {n_j} is
// multiplied by exp(sum_j alpha_j n_j), alpha_j = dW_j + (2<n_j> - 1) gamma dt,
// then the state is normalized. The first overload takes the densities
// <n_j> from `expect_pre` (the state before the unitary factor of the same
// composite step); the second computes them from psi itself.
VectorXcd dephasing_step(const VectorXcd& psi,
                         std::span<const double> increments, double gamma,
                         double dt, const SectorBasis& basis,
                         std::span<const double> expect_pre);
VectorXcd dephasing_step(const VectorXcd& psi,
                         std::span<const double> increments, double gamma,
                         double dt, const SectorBasis& basis);

// Site densities <n_j> from the amplitude weights.
VectorXd sector_densities(const VectorXcd& psi, const SectorBasis& basis);

// Von Neumann entropy of the first l sites. The sector vector is reshaped
// into per-(particles in A) blocks (number conservation makes the reduced
// density block diagonal) and each block is handled by an SVD.
double entanglement_entropy_statevector(const VectorXcd& psi,
                                        const SectorBasis& basis, int l);

// Inverse participation ratio sum_b |psi_b|^4 of a normalized state.
double ipr(const VectorXcd& psi);

// Mean half-chain entropy of n_samples equal-amplitude random-phase states
// in the half-filling sector; the chaotic-dynamics reference value.
double page_reference(int L, int n_samples, std::uint64_t seed);

// Trajectory engine for the sector models: one advance() = site densities
// on the pre-unitary state, Krylov unitary factor, diagonal measurement
// factor, normalization.
class ManyBodyEngine : public Engine {
  public:
    ManyBodyEngine(SectorBasis basis, SparseMatrixXcd hamiltonian,
                   double gamma, double dt, double krylov_tol = 1e-12,
                   int krylov_m_max = 30);

    void advance(NoiseStream& noise) override;
    void observe(std::span<const ObservableSpec> what,
                 std::span<double> out) const override;

    const SectorBasis& basis() const { return basis_; }
    const VectorXcd& amplitudes() const { return psi_; }

  private:
    SectorBasis basis_;
    SparseMatrixXcd hamiltonian_;
    double gamma_;
    double dt_;
    double krylov_tol_;
    int krylov_m_max_;
    VectorXcd psi_;
};

// Both models start from the staggered state (1-based even sites occupied).
ManyBodyEngine make_tv_engine(int L, double t, double W, double V,
                              double gamma, double dt);
ManyBodyEngine make_syk_engine(const SykCouplings& couplings, double gamma,
                               double dt);

}  // namespace ftraj
