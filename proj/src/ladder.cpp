#include "ftraj/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace ftraj {

namespace {

constexpr double kPole = 1e-12;

void check_probabilities(double p1, double p2) {
    if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
        throw ConfigError("measurement probabilities must lie in [0, 1]");
}

// Occupied-mode projection: D -> D + E_aa - D e_a e_a^dag D / D_aa.
// The snapshot of column a keeps the update simultaneous and Hermitian.
void project_occupied(MatrixXcd& D, int a, double occ) {
    const VectorXcd col = D.col(a);
    D(a, a) += 1.0;
    D.noalias() -= col * (col.adjoint() / occ);
}

// Empty-mode projection: D -> D - E_aa + (e_a - D e_a)(...)^dag / (1-D_aa).
void project_empty(MatrixXcd& D, int a, double occ) {
    VectorXcd col = -D.col(a);
    col(a) += 1.0;
    D(a, a) -= 1.0;
    D.noalias() += col * (col.adjoint() / (1.0 - occ));
}

}  // namespace

MatrixXcd init_random_halffilling(int L, NoiseStream& stream) {
    if (L < 1) throw ConfigError("need at least one site per chain");
    const int modes = 2 * L;
    MatrixXcd D = MatrixXcd::Zero(modes, modes);
    int need = L;
    for (int a = 0; a < modes && need > 0; ++a) {
        // Selection sampling: include mode a with probability
        // (still needed) / (still available), giving a uniform subset.
        const double p =
            static_cast<double>(need) / static_cast<double>(modes - a);
        if (stream.uniform() <= p) {
            D(a, a) = 1.0;
            --need;
        }
    }
    return D;
}

MatrixXcd bloch_step_matrix(const LadderParams& params, int L) {
    if (L < 1) throw ConfigError("need at least one site per chain");
    // Closed-form momentum blocks: H_k = a I + b sigma_z + c sigma_x with
    // a = (t1+t2) cos k, b = (t1-t2) cos k, c = t12, so
    // U_k = e^{-i a tau} [cos(w tau) I - i sin(w tau) (b sigma_z + c sigma_x)/w],
    // w = sqrt(b^2 + c^2).
    std::vector<Eigen::Matrix2cd> uk(static_cast<std::size_t>(L));
    for (int n = 0; n < L; ++n) {
        const double k = 2.0 * std::numbers::pi * n / L;
        const double a = (params.t1 + params.t2) * std::cos(k);
        const double b = (params.t1 - params.t2) * std::cos(k);
        const double c = params.t12;
        const double w = std::hypot(b, c);
        const Complex phase = std::exp(Complex(0.0, -a * params.tau_u));
        Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
        if (w > 0.0) {
            const double cw = std::cos(w * params.tau_u);
            const double sw = std::sin(w * params.tau_u);
            u(0, 0) = Complex(cw, -sw * b / w);
            u(1, 1) = Complex(cw, sw * b / w);
            u(0, 1) = Complex(0.0, -sw * c / w);
            u(1, 0) = u(0, 1);
        }
        uk[static_cast<std::size_t>(n)] = phase * u;
    }

    MatrixXcd R = MatrixXcd::Zero(2 * L, 2 * L);
    for (int m = 0; m < L; ++m)
        for (int n = 0; n < L; ++n) {
            Eigen::Matrix2cd block = Eigen::Matrix2cd::Zero();
            for (int q = 0; q < L; ++q) {
                const double k = 2.0 * std::numbers::pi * q / L;
                block += std::exp(Complex(0.0, -k * (m - n))) *
                         uk[static_cast<std::size_t>(q)];
            }
            R.block<2, 2>(2 * m, 2 * n) = block / static_cast<double>(L);
        }
    return R;
}

void unitary_update(MatrixXcd& D, const MatrixXcd& R) {
    if (D.rows() != R.rows() || D.cols() != R.cols())
        throw ConfigError("correlation and propagator sizes differ");
    D = R.adjoint() * D * R;
}

void projective_sweep(MatrixXcd& D, double p1, double p2,
                      NoiseStream& stream) {
    check_probabilities(p1, p2);
    const int modes = static_cast<int>(D.rows());
    if (modes % 2 != 0) throw OddSize("correlation matrix needs 2L modes");
    const int L = modes / 2;
    for (int site = 0; site < L; ++site)
        for (int chain = 0; chain < 2; ++chain) {
            const double p = chain == 0 ? p1 : p2;
            if (stream.uniform() > p) continue;
            const int a = 2 * site + chain;
            const double occ = D(a, a).real();
            const double q = stream.uniform();
            bool occupied = q <= occ;
            // Near a pole of either update the outcome is forced to the
            // deterministic branch (the other one has vanishing weight).
            if (occ < kPole)
                occupied = false;
            else if (occ > 1.0 - kPole)
                occupied = true;
            if (occupied)
                project_occupied(D, a, occ);
            else
                project_empty(D, a, occ);
        }
}

double fln(const MatrixXcd& D, int part_a) {
    const int modes = static_cast<int>(D.rows());
    if (modes % 2 != 0) throw OddSize("correlation matrix needs 2L modes");
    const int L = modes / 2;
    if (part_a < 1 || part_a >= L)
        throw ConfigError("bipartition length out of range");

    MatrixXcd D1(L, L);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) D1(i, j) = D(2 * i, 2 * j);

    const MatrixXcd G1 =
        2.0 * D1 - MatrixXcd::Identity(L, L);
    MatrixXcd Gp = G1, Gm = G1;
    const Complex im(0.0, 1.0);
    Gp.topRightCorner(part_a, L - part_a) *= im;
    Gp.bottomLeftCorner(L - part_a, part_a) *= im;
    Gm.topRightCorner(part_a, L - part_a) *= -im;
    Gm.bottomLeftCorner(L - part_a, part_a) *= -im;
    Gp.bottomRightCorner(L - part_a, L - part_a) *= -1.0;
    Gm.bottomRightCorner(L - part_a, L - part_a) *= -1.0;

    const MatrixXcd M = MatrixXcd::Identity(L, L) + Gp * Gm;
    Eigen::FullPivLU<MatrixXcd> lu(M);
    if (!lu.isInvertible())
        throw SingularResolvent("1 + G+ G- is numerically singular");
    const MatrixXcd Gx =
        0.5 * (MatrixXcd::Identity(L, L) - lu.solve(Gp + Gm));

    Eigen::ComplexEigenSolver<MatrixXcd> ces(Gx, false);
    double e = 0.0;
    for (Eigen::Index j = 0; j < ces.eigenvalues().size(); ++j) {
        const Complex mu = ces.eigenvalues()(j);
        if (std::abs(mu.imag()) > 1e-6)
            throw NumericalBreakdown(
                "crossed correlation spectrum is not real");
        double m = std::clamp(mu.real(), 0.0, 1.0);
        // Snap to the boundary below 1e-12: the kernel has infinite slope
        // at m = 0 and m = 1, so solver noise of order 1e-16 would
        // otherwise be amplified to sqrt-size contributions.
        if (m < 1e-12)
            m = 0.0;
        else if (m > 1.0 - 1e-12)
            m = 1.0;
        e += std::log(std::sqrt(m) + std::sqrt(1.0 - m));
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(D1, Eigen::EigenvaluesOnly);
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        const double lam = std::clamp(es.eigenvalues()(j), 0.0, 1.0);
        e += 0.5 * std::log((1.0 - lam) * (1.0 - lam) + lam * lam);
    }
    return e;
}

SteadyValue run_protocol(const LadderParams& params, int L,
                         NoiseStream& stream) {
    if (L % 2 != 0) throw OddSize("half-System cut needs an even L");
    if (params.n_steady < 0 || params.tail < 1)
        throw ConfigError("cycle counts must be nonnegative with tail >= 1");
    LadderEngine engine(params, L, stream);
    for (int c = 0; c < params.n_steady; ++c) engine.advance(stream);
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < params.tail; ++s) {
        engine.advance(stream);
        const double e = fln(engine.correlations(), L / 2);
        sum += e;
        sum_sq += e * e;
    }
    const double n = static_cast<double>(params.tail);
    SteadyValue out;
    out.value = sum / n;
    if (params.tail > 1) {
        const double var =
            std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
        out.stderr = std::sqrt(var / n);
    }
    return out;
}

LadderEngine::LadderEngine(const LadderParams& params, int L,
                           NoiseStream& init_stream)
    : params_(params), sites_(L) {
    check_probabilities(params.p1, params.p2);
    r_ = bloch_step_matrix(params, L);
    d_ = init_random_halffilling(L, init_stream);
}

void LadderEngine::advance(NoiseStream& stream) {
    unitary_update(d_, r_);
    projective_sweep(d_, params_.p1, params_.p2, stream);
}

void LadderEngine::observe(std::span<const ObservableSpec> what,
                           std::span<double> out) const {
    if (out.size() < what.size())
        throw EngineError("output span too small for observable list");
    for (std::size_t i = 0; i < what.size(); ++i) {
        switch (what[i].kind) {
            case ObservableSpec::Kind::Negativity:
                out[i] = fln(d_, what[i].index);
                break;
            case ObservableSpec::Kind::Density:
                // System-chain occupation at the 1-based site index.
                out[i] = d_(2 * (what[i].index - 1), 2 * (what[i].index - 1))
                             .real();
                break;
            default:
                throw EngineError("observable '" + what[i].name +
                                  "' not available for ladder engines");
        }
    }
}

}  // namespace ftraj
