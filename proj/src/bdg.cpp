#include "ftraj/bdg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>

#include "orthonormalize.hpp"

namespace ftraj {

QuadraticOperator build_kitaev(int L, double J, double h) {
    QuadraticOperator op;
    op.hop = MatrixXcd::Zero(L, L);
    op.pair = MatrixXcd::Zero(L, L);
    for (int j = 0; j < L; ++j) {
        const int jp = (j + 1) % L;
        op.hop(j, jp) += -J;
        op.hop(jp, j) += -J;
        op.hop(j, j) += -2.0 * h;
        // -J c_j^dag c_{j+1}^dag + h.c. in the antisymmetric convention
        // 1/2 sum pair_ab c_a^dag c_b^dag.
        op.pair(j, jp) += -J;
        op.pair(jp, j) += +J;
    }
    return op;
}

LongRangeKernel kac_coefficients(int L, double alpha) {
    LongRangeKernel kernel;
    kernel.alpha = alpha;
    kernel.f.resize(L, L);
    double total = 0.0;
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const int d = std::min(std::abs(i - j), L - std::abs(i - j));
            const double w = std::pow(1.0 + d, -alpha);
            kernel.f(i, j) = w;
            total += w;
        }
    kernel.kac = total / (L - 1);
    kernel.f /= kernel.kac;
    return kernel;
}

QuadraticOperator longrange_operator(const LongRangeKernel& kernel, int i) {
    // m_i = sum_j f_ij (c_i - c_i^dag)(c_j + c_j^dag)
    //     = f_ii - sum_j f_ij (c_j^dag c_i + c_i^dag c_j)
    //       - sum_j f_ij c_i^dag c_j^dag + sum_j f_ij c_i c_j.
    const int L = kernel.sites();
    QuadraticOperator op;
    op.hop = MatrixXcd::Zero(L, L);
    op.pair = MatrixXcd::Zero(L, L);
    op.constant = kernel.f(i, i);
    for (int j = 0; j < L; ++j) {
        const double fij = kernel.f(i, j);
        op.hop(i, j) += -fij;
        op.hop(j, i) += -fij;
        op.pair(i, j) += -fij;
        op.pair(j, i) += +fij;
    }
    return op;
}

MatrixXcd nambu_representation(const QuadraticOperator& op) {
    const int L = op.sites();
    MatrixXcd N(2 * L, 2 * L);
    N.topLeftCorner(L, L) = op.hop;
    N.topRightCorner(L, L) = op.pair;
    N.bottomLeftCorner(L, L) = -op.pair.conjugate();
    N.bottomRightCorner(L, L) = -op.hop.transpose();
    return N;
}

BdGState init_neel_bdg(int L) {
    if (L % 2 != 0) throw OddSize("init_neel_bdg: L must be even");
    BdGState state;
    state.u = MatrixXcd::Zero(L, L);
    state.v = MatrixXcd::Zero(L, L);
    for (int j = 0; j < L; ++j) {
        // Even sites (1-based) = odd 0-based indices are occupied:
        // annihilator c_j^dag there, c_j elsewhere.
        if (j % 2 == 1)
            state.v(j, j) = 1.0;
        else
            state.u(j, j) = 1.0;
    }
    return state;
}

double unitarity_defect(const BdGState& state) {
    const int L = state.sites();
    return (state.u.adjoint() * state.u + state.v.adjoint() * state.v -
            MatrixXcd::Identity(L, L))
        .cwiseAbs()
        .maxCoeff();
}

void reunitarize(BdGState& state) {
    const int L = state.sites();
    MatrixXcd frame(2 * L, L);
    frame.topRows(L) = state.u;
    frame.bottomRows(L) = state.v;
    orthonormalize_columns(frame);
    state.u = frame.topRows(L);
    state.v = frame.bottomRows(L);
}

std::pair<MatrixXcd, MatrixXcd> pair_correlations(const BdGState& state) {
    return {state.v * state.v.adjoint(), state.u * state.v.adjoint()};
}

VectorXd densities(const BdGState& state) {
    return state.v.rowwise().squaredNorm();
}

MatrixXcd bogoliubov_propagator(const QuadraticOperator& op, double dt) {
    const MatrixXcd N = nambu_representation(op);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(N);
    MatrixXcd phases = MatrixXcd::Zero(N.rows(), N.cols());
    for (Eigen::Index k = 0; k < N.rows(); ++k)
        phases(k, k) = std::exp(Complex(0, -es.eigenvalues()[k] * dt));
    return es.eigenvectors() * phases * es.eigenvectors().adjoint();
}

void unitary_step(BdGState& state, const MatrixXcd& propagator) {
    const int L = state.sites();
    MatrixXcd frame(2 * L, L);
    frame.topRows(L) = state.u;
    frame.bottomRows(L) = state.v;
    frame = propagator * frame;
    state.u = frame.topRows(L);
    state.v = frame.bottomRows(L);
}

void unitary_step(BdGState& state, const QuadraticOperator& op, double dt) {
    unitary_step(state, bogoliubov_propagator(op, dt));
}

namespace {

// exp(sum_j alpha_j n_j) acting on the frame, QR deferred to the caller:
// exp(-Nambu(diag(alpha))): u rows shrink, v rows grow, pushing occupations
// toward the recorded signal.
void apply_onsite_factor(BdGState& state, std::span<const double> increments,
                         double gamma, double dt,
                         std::span<const double> density_pre) {
    const int L = state.sites();
    for (int j = 0; j < L; ++j) {
        const double alpha =
            increments[j] + (2.0 * density_pre[j] - 1.0) * gamma * dt;
        state.u.row(j) *= std::exp(-alpha);
        state.v.row(j) *= std::exp(alpha);
    }
}

}  // namespace

void measurement_step_onsite(BdGState& state,
                             std::span<const double> increments, double gamma,
                             double dt, std::span<const double> density_pre) {
    apply_onsite_factor(state, increments, gamma, dt, density_pre);
    reunitarize(state);
}

void measurement_step_onsite(BdGState& state,
                             std::span<const double> increments, double gamma,
                             double dt) {
    const VectorXd n = densities(state);
    measurement_step_onsite(state, increments, gamma, dt,
                            std::span<const double>(n.data(), n.size()));
}

VectorXd longrange_expectations(const BdGState& state,
                                const LongRangeKernel& kernel) {
    auto [G, F] = pair_correlations(state);
    const int L = state.sites();
    VectorXd m(L);
    const Eigen::MatrixXd re_diff = (F - G).real();
    for (int i = 0; i < L; ++i)
        m(i) = kernel.f(i, i) + 2.0 * kernel.f.row(i).dot(re_diff.row(i));
    return m;
}

namespace {

// exp(sum_i alpha_i m_i) acting on the frame, QR deferred to the caller.
void apply_longrange_factor(BdGState& state,
                            std::span<const double> increments,
                            const LongRangeKernel& kernel, double gamma,
                            double dt, std::span<const double> expect_pre) {
    const int L = state.sites();
    // K = sum_i alpha_i m_i as a quadratic operator: with D = diag(alpha)
    // the hop block is -(D f + f D) and the pair block -(D f - f D).
    Eigen::VectorXd alpha(L);
    for (int i = 0; i < L; ++i)
        alpha(i) = increments[i] + 2.0 * expect_pre[i] * gamma * dt;
    const Eigen::MatrixXd df = alpha.asDiagonal() * kernel.f;
    QuadraticOperator K;
    K.hop = -(df + df.transpose()).cast<Complex>();
    K.pair = -(df - df.transpose()).cast<Complex>();
    // Non-unitary factor: exp(-Nambu(K)) by scaling-and-squaring.
    const MatrixXcd T = (-nambu_representation(K)).exp();
    MatrixXcd frame(2 * L, L);
    frame.topRows(L) = state.u;
    frame.bottomRows(L) = state.v;
    frame = T * frame;
    state.u = frame.topRows(L);
    state.v = frame.bottomRows(L);
}

}  // namespace

void measurement_step_longrange(BdGState& state,
                                std::span<const double> increments,
                                const LongRangeKernel& kernel, double gamma,
                                double dt,
                                std::span<const double> expect_pre) {
    apply_longrange_factor(state, increments, kernel, gamma, dt, expect_pre);
    reunitarize(state);
}

void measurement_step_longrange(BdGState& state,
                                std::span<const double> increments,
                                const LongRangeKernel& kernel, double gamma,
                                double dt) {
    const VectorXd m = longrange_expectations(state, kernel);
    measurement_step_longrange(state, increments, kernel, gamma, dt,
                               std::span<const double>(m.data(), m.size()));
}

double pfaffian(Eigen::MatrixXd A) {
    // Parlett-Reid: reduce to tridiagonal form by congruence with Gauss
    // transforms and partial pivoting; Pf = product of superdiagonal
    // entries, sign flipped per row swap.
    const Eigen::Index n = A.rows();
    if (n % 2 != 0) return 0.0;
    double pf = 1.0;
    for (Eigen::Index k = 0; k + 2 <= n; k += 2) {
        // Pivot: largest |A(j, k)| for j > k.
        Eigen::Index piv = k + 1;
        double best = std::abs(A(k + 1, k));
        for (Eigen::Index j = k + 2; j < n; ++j)
            if (std::abs(A(j, k)) > best) {
                best = std::abs(A(j, k));
                piv = j;
            }
        if (piv != k + 1) {
            A.row(piv).swap(A.row(k + 1));
            A.col(piv).swap(A.col(k + 1));
            pf = -pf;
        }
        const double a = A(k + 1, k);
        if (a == 0.0) return 0.0;
        pf *= -a;  // Pf contribution is A(k, k+1) = -A(k+1, k)
        for (Eigen::Index j = k + 2; j < n; ++j) {
            const double factor = A(j, k) / a;
            if (factor != 0.0) {
                A.row(j) -= factor * A.row(k + 1);
                A.col(j) -= factor * A.col(k + 1);
            }
        }
    }
    return pf;
}

double parity_expectation(const BdGState& state) {
    // Majorana covariance M_ab = -i (<w_a w_b> - delta_ab) with
    // w_{2j} = c_j + c_j^dag, w_{2j+1} = i (c_j^dag - c_j); <P> = Pf(M).
    auto [G, F] = pair_correlations(state);
    const int L = state.sites();
    const MatrixXcd Fd = F.adjoint();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * L, 2 * L);
    const Complex I(0, 1);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const double d = i == j ? 1.0 : 0.0;
            const Complex ee =
                F(i, j) + d - G(j, i) + G(i, j) + Fd(i, j);          // <w_2i w_2j>
            const Complex eo =
                I * (d - G(j, i) - F(i, j) + Fd(i, j) - G(i, j));    // <w_2i w_2j+1>
            const Complex oe =
                I * (G(i, j) + Fd(i, j) - F(i, j) - d + G(j, i));    // <w_2i+1 w_2j>
            const Complex oo =
                -(Fd(i, j) - G(i, j) - d + G(j, i) + F(i, j));       // <w_2i+1 w_2j+1>
            M(2 * i, 2 * j) = (-I * (ee - d)).real();
            M(2 * i, 2 * j + 1) = (-I * eo).real();
            M(2 * i + 1, 2 * j) = (-I * oe).real();
            M(2 * i + 1, 2 * j + 1) = (-I * (oo - d)).real();
        }
    return pfaffian(std::move(M));
}

namespace {

// Shared observable evaluation for the Kitaev engines.
void observe_bdg(const BdGState& state,
                 std::span<const ObservableSpec> what,
                 std::span<double> out) {
    const MatrixXcd* G = nullptr;
    MatrixXcd G_storage, F_storage;
    auto correlations = [&]() {
        if (!G) {
            auto gf = pair_correlations(state);
            G_storage = std::move(gf.first);
            F_storage = std::move(gf.second);
            G = &G_storage;
        }
    };
    for (std::size_t i = 0; i < what.size(); ++i) {
        switch (what[i].kind) {
            case ObservableSpec::Kind::EntropyCut:
                correlations();
                out[i] = entropy_from_spectrum(restrict_and_diagonalize_nambu(
                    G_storage, F_storage, what[i].index));
                break;
            case ObservableSpec::Kind::Density:
                correlations();
                out[i] = G_storage(what[i].index - 1, what[i].index - 1).real();
                break;
            case ObservableSpec::Kind::Parity:
                out[i] = parity_expectation(state);
                break;
            default:
                throw EngineError("observable '" + what[i].name +
                                  "' not available for Kitaev engines");
        }
    }
}

// Z = -[u^dag]^-1 v^dag, or an empty matrix when u is too ill-conditioned
// for the comparison to be meaningful.
MatrixXcd z_matrix_or_empty(const BdGState& state) {
    Eigen::PartialPivLU<MatrixXcd> lu(state.u.adjoint());
    const auto& lu_mat = lu.matrixLU();
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lu_mat.rows(); ++k) {
        const double d = std::abs(lu_mat(k, k));
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
    }
    if (!(dmin > 1e-10 * dmax)) return MatrixXcd();
    return -lu.solve(state.v.adjoint());
}

void check_z_invariance(const BdGState& before_qr, const BdGState& after_qr) {
    const MatrixXcd za = z_matrix_or_empty(before_qr);
    const MatrixXcd zb = z_matrix_or_empty(after_qr);
    if (za.size() == 0 || zb.size() == 0) return;
    const double scale = std::max(1.0, za.cwiseAbs().maxCoeff());
    if ((za - zb).cwiseAbs().maxCoeff() > 1e-6 * scale)
        throw NumericalBreakdown(
            "re-unitarization moved the pairing matrix Z");
}

void check_unitarity(const BdGState& state) {
    if (unitarity_defect(state) > 1e-9)
        throw NumericalBreakdown(
            "Bogoliubov unitarity defect above 1e-9 (dt too large?)");
}

}  // namespace

KitaevOnsiteEngine::KitaevOnsiteEngine(int L, double J, double h, double gamma,
                                       double dt, int z_check_stride)
    : state_(init_neel_bdg(L)),
      propagator_(bogoliubov_propagator(build_kitaev(L, J, h), dt)),
      gamma_(gamma),
      dt_(dt),
      z_check_stride_(z_check_stride) {}

void KitaevOnsiteEngine::advance(NoiseStream& noise) {
    const int L = state_.sites();
    const VectorXd n_pre = densities(state_);
    const auto dw = wiener_increments(noise, L, gamma_, dt_);
    unitary_step(state_, propagator_);
    apply_onsite_factor(state_, dw, gamma_, dt_,
                        std::span<const double>(n_pre.data(), n_pre.size()));
    const bool check_z =
        z_check_stride_ > 0 && (step_count_ + 1) % z_check_stride_ == 0;
    const BdGState pre_qr = check_z ? state_ : BdGState{};
    reunitarize(state_);
    if (check_z) check_z_invariance(pre_qr, state_);
    ++step_count_;
    check_unitarity(state_);
}

void KitaevOnsiteEngine::observe(std::span<const ObservableSpec> what,
                                 std::span<double> out) const {
    observe_bdg(state_, what, out);
}

KitaevLongRangeEngine::KitaevLongRangeEngine(int L, double J, double h,
                                             double gamma, double alpha,
                                             double dt, int z_check_stride)
    : state_(init_neel_bdg(L)),
      kernel_(kac_coefficients(L, alpha)),
      propagator_(bogoliubov_propagator(build_kitaev(L, J, h), dt)),
      gamma_(gamma),
      dt_(dt),
      z_check_stride_(z_check_stride) {}

void KitaevLongRangeEngine::advance(NoiseStream& noise) {
    const int L = state_.sites();
    const VectorXd m_pre = longrange_expectations(state_, kernel_);
    const auto dw = wiener_increments(noise, L, gamma_, dt_);
    unitary_step(state_, propagator_);
    apply_longrange_factor(state_, dw, kernel_, gamma_, dt_,
                           std::span<const double>(m_pre.data(),
                                                   m_pre.size()));
    const bool check_z =
        z_check_stride_ > 0 && (step_count_ + 1) % z_check_stride_ == 0;
    const BdGState pre_qr = check_z ? state_ : BdGState{};
    reunitarize(state_);
    if (check_z) check_z_invariance(pre_qr, state_);
    ++step_count_;
    check_unitarity(state_);
}

void KitaevLongRangeEngine::observe(std::span<const ObservableSpec> what,
                                    std::span<double> out) const {
    observe_bdg(state_, what, out);
}

}  // namespace ftraj
