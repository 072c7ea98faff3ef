#pragma once

#include <cstdint>

#include "ftraj/ensemble.hpp"
#include "ftraj/entropy.hpp"
#include "ftraj/errors.hpp"
#include "ftraj/noise.hpp"
#include "ftraj/observable.hpp"

namespace ftraj {

// Stroboscopic dynamics of two periodically coupled hopping chains ("System"
// and "Ancilla", L sites each). Each protocol cycle applies the hopping
// unitary for a time tau_u and then sweeps all 2L modes with random local
// occupation measurements, with probability p1 per System site and p2 per
// Ancilla site. The trajectory state stays a Slater determinant, so the
// whole evolution is carried by the 2L x 2L one-body correlation matrix
// D_ab = <c^dag_a c_b> with the mode convention a = 2*site + chain
// (chain 0 = System, chain 1 = Ancilla).
struct LadderParams {
    double t1 = 1.0;    // System intra-chain hopping
    double t2 = 1.0;    // Ancilla intra-chain hopping
    double t12 = 1.5707963267948966;  // rung hopping (pi/2)
    double p1 = 0.0;    // System per-site measurement probability
    double p2 = 0.0;    // Ancilla per-site measurement probability
    double tau_u = 1.0; // duration of the unitary segment of one cycle
    int n_steady = 250; // cycles run before the averaging window opens
    int tail = 5;       // cycles averaged after the window opens
};

// Diagonal correlation matrix of a random half-filled product state:
// exactly L of the 2L modes are occupied, the subset drawn uniformly.
MatrixXcd init_random_halffilling(int L, NoiseStream& stream);

// One-cycle single-particle propagator R. The Hamiltonian is block
// circulant, so R is assembled from the closed-form 2x2 momentum blocks
// U_k = exp(-i H_k tau_u), H_k = [[2 t1 cos k, t12], [t12, 2 t2 cos k]]:
// the (site m, site n) block of R is (1/L) sum_k e^{-ik(m-n)} U_k.
// The correlation matrix advances as D -> R^dag D R.
MatrixXcd bloch_step_matrix(const LadderParams& params, int L);

// D -> R^dag D R (spectrum and trace preserved for unitary R).
void unitary_update(MatrixXcd& D, const MatrixXcd& R);

// Measurement sweep in fixed site-major, chain-minor order. For each mode:
// draw z in (0,1]; if z <= p_chain, the mode is measured, a second draw
// q in (0,1] selects the outcome (occupied iff q <= D_aa), and the
// corresponding rank-1 projection update is applied to D in place, using
// the current (already partially swept) matrix. When D_aa sits within
// 1e-12 of a pole of the update (0 or 1) the outcome is forced to the
// deterministic one instead; q is still consumed so the draw sequence
// matches the literal protocol.
void projective_sweep(MatrixXcd& D, double p1, double p2,
                      NoiseStream& stream);

// Fermionic logarithmic negativity of the System chain, bipartitioned into
// its first part_a sites and the rest, after tracing out the Ancilla.
// Computed entirely from the System block D1 of the correlation matrix:
// with Gamma_1 = 2 D1 - 1 split into blocks over the bipartition,
// Gamma_pm = [[AA, +-i AB], [+-i BA, -BB]] and
// Gamma_x = (1 - (1 + G+ G-)^{-1} (G+ + G-)) / 2, the result is
//   E = sum_j ln(sqrt(mu_j) + sqrt(1 - mu_j))
//     + (1/2) sum_j ln((1 - lambda_j)^2 + lambda_j^2)
// over the eigenvalues mu_j of Gamma_x and lambda_j of D1.
// Throws SingularResolvent if 1 + G+ G- is not invertible and
// NumericalBreakdown if the mu_j develop a large imaginary residue.
double fln(const MatrixXcd& D, int part_a);

// One full trajectory: n_steady cycles to reach the averaging window, then
// `tail` further cycles whose negativity at the half-System cut is
// averaged. Returns that mean and its standard error over the tail.
SteadyValue run_protocol(const LadderParams& params, int L,
                         NoiseStream& stream);

// Engine adapter: one advance() = one protocol cycle. The initial random
// product state is drawn from the stream passed to the constructor, so a
// trajectory factory can hand in its per-trajectory stream.
class LadderEngine : public Engine {
  public:
    LadderEngine(const LadderParams& params, int L, NoiseStream& init_stream);

    void advance(NoiseStream& stream) override;
    void observe(std::span<const ObservableSpec> what,
                 std::span<double> out) const override;

    int sites() const { return sites_; }
    const MatrixXcd& correlations() const { return d_; }

  private:
    LadderParams params_;
    int sites_;
    MatrixXcd r_;
    MatrixXcd d_;
};

}  // namespace ftraj
