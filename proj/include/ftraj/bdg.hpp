#pragma once

#include <span>
#include <utility>

#include "ftraj/ensemble.hpp"
#include "ftraj/entropy.hpp"
#include "ftraj/noise.hpp"

namespace ftraj {

// General quadratic fermion operator
//   A = constant + sum_ij hop_ij c_i^dag c_j
//     + 1/2 sum_ij ( pair_ij c_i^dag c_j^dag - conj(pair_ij) c_i c_j ),
// with hop Hermitian and pair antisymmetric. Hermitian iff constant is real
// (always, here).
struct QuadraticOperator {
    MatrixXcd hop;   // Hermitian
    MatrixXcd pair;  // antisymmetric
    double constant = 0.0;

    int sites() const { return static_cast<int>(hop.rows()); }
};

// H = -sum_j [ J (c_j^dag c_{j+1} + c_j^dag c_{j+1}^dag + h.c.) + 2 h n_j ]
// on a periodic ring.
QuadraticOperator build_kitaev(int L, double J, double h);

// Power-law measurement kernel on the ring, f_ij = (1+D_ij)^-alpha / N(alpha)
// with D_ij = min(|i-j|, L-|i-j|) and the normalization
// N(alpha) = (L-1)^-1 sum_ij (1+D_ij)^-alpha.
struct LongRangeKernel {
    Eigen::MatrixXd f;  // symmetric
    double alpha = 0.0;
    double kac = 0.0;  // N(alpha)

    int sites() const { return static_cast<int>(f.rows()); }
};

LongRangeKernel kac_coefficients(int L, double alpha);

// The quadratic operator whose exponential is the measurement factor for
// the long-range dissipator at site i:
//   m_i = sum_j f_ij (c_i - c_i^dag)(c_j + c_j^dag).
// Hermitian, with m_i^2 = sum_l f_il^2 (a number), so q_i = 0.
QuadraticOperator longrange_operator(const LongRangeKernel& kernel, int i);

// Block matrix [[hop, pair], [-conj(pair), -hop^T]]; Hermitian when the
// operator is. The frame of annihilator coefficients transforms under
// e^{A} (A the quadratic operator above, constant dropped) as
//   [u; v] <- exp(-Nambu(A)^dag) [u; v],
// which specializes to exp(-i Nambu(H) dt) for the unitary factor and
// exp(-Nambu(K)) for a Hermitian measurement exponent K.
MatrixXcd nambu_representation(const QuadraticOperator& op);

// Bogoliubov frame of the evolved state: columns of [u; v] are the
// coefficient vectors of the quasiparticle annihilators,
// gamma_k = sum_j ( conj(u_jk) c_j + conj(v_jk) c_j^dag ).
struct BdGState {
    MatrixXcd u;  // L x L
    MatrixXcd v;  // L x L

    int sites() const { return static_cast<int>(u.rows()); }
};

// Staggered product state: even sites (1-based) occupied.
BdGState init_neel_bdg(int L);

// max |u^dag u + v^dag v - 1|.
double unitarity_defect(const BdGState& state);

// QR on the stacked 2L x L frame, positive-diagonal convention; leaves the
// physical state (and its pairing matrix Z = -[u^dag]^-1 v^dag) unchanged.
void reunitarize(BdGState& state);

// G_ij = <c_i^dag c_j> = (v v^dag)_ij and F_ij = <c_i c_j> = (u v^dag)_ij;
// G Hermitian, F antisymmetric (by the off-diagonal unitarity constraint).
std::pair<MatrixXcd, MatrixXcd> pair_correlations(const BdGState& state);

// Occupations <n_j>, the diagonal of G (real).
VectorXd densities(const BdGState& state);

// exp(-i Nambu(H) dt), built once per (H, dt) via Hermitian
// eigendecomposition.
MatrixXcd bogoliubov_propagator(const QuadraticOperator& op, double dt);

void unitary_step(BdGState& state, const MatrixXcd& propagator);
void unitary_step(BdGState& state, const QuadraticOperator& op, double dt);

// Measurement factor for m_j = n_j (q_j = 1): u row j scaled by
// exp(-alpha_j), v row j by exp(+alpha_j), alpha_j = dW_j +
// (2<n_j> - 1) gamma dt with expectations from `density_pre` (the state
// before the unitary factor of the same composite step). Re-unitarized.
void measurement_step_onsite(BdGState& state, std::span<const double> increments,
                             double gamma, double dt,
                             std::span<const double> density_pre);
void measurement_step_onsite(BdGState& state, std::span<const double> increments,
                             double gamma, double dt);

// <m_i> for all i at once: <m_i> = f_ii + 2 sum_j f_ij Re(F_ij - G_ij).
VectorXd longrange_expectations(const BdGState& state,
                                const LongRangeKernel& kernel);

// Measurement factor for the long-range dissipators (q_i = 0):
// alpha_i = dW_i + 2 <m_i> gamma dt, K = sum_i alpha_i m_i, frame <-
// exp(-Nambu(K)) [u; v] via scaling-and-squaring, then re-unitarized.
void measurement_step_longrange(BdGState& state,
                                std::span<const double> increments,
                                const LongRangeKernel& kernel, double gamma,
                                double dt,
                                std::span<const double> expect_pre);
void measurement_step_longrange(BdGState& state,
                                std::span<const double> increments,
                                const LongRangeKernel& kernel, double gamma,
                                double dt);

// Pfaffian of a real antisymmetric matrix (Parlett-Reid elimination with
// pivoting). Used for the parity expectation.
double pfaffian(Eigen::MatrixXd A);

// <P> = <prod_j (1 - 2 n_j)> from the Majorana covariance; +-1 on parity
// eigenstates, conserved along trajectories of the parity-even dynamics.
double parity_expectation(const BdGState& state);

// Trajectory engines. One advance() = unitary factor, measurement factor
// with pre-step expectations, QR. The unitarity defect is checked each step
// (tolerance 1e-9). `z_check_stride` > 0 additionally verifies every that
// many steps that QR left Z = -[u^dag]^-1 v^dag unchanged (debug aid).
class KitaevOnsiteEngine : public Engine {
  public:
    KitaevOnsiteEngine(int L, double J, double h, double gamma, double dt,
                       int z_check_stride = 0);

    void advance(NoiseStream& noise) override;
    void observe(std::span<const ObservableSpec> what,
                 std::span<double> out) const override;

    const BdGState& state() const { return state_; }
    BdGState& state() { return state_; }

  private:
    BdGState state_;
    MatrixXcd propagator_;
    double gamma_;
    double dt_;
    int z_check_stride_;
    long step_count_ = 0;
};

class KitaevLongRangeEngine : public Engine {
  public:
    KitaevLongRangeEngine(int L, double J, double h, double gamma,
                          double alpha, double dt, int z_check_stride = 0);

    void advance(NoiseStream& noise) override;
    void observe(std::span<const ObservableSpec> what,
                 std::span<double> out) const override;

    const BdGState& state() const { return state_; }
    const LongRangeKernel& kernel() const { return kernel_; }

  private:
    BdGState state_;
    LongRangeKernel kernel_;
    MatrixXcd propagator_;
    double gamma_;
    double dt_;
    int z_check_stride_;
    long step_count_ = 0;
};

}  // namespace ftraj
