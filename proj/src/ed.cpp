#include "ftraj/ed.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ftraj {

namespace {

constexpr int kMaxBits = 30;

std::int64_t binom(int n, int k) {
    static const auto table = [] {
        std::array<std::array<std::int64_t, kMaxBits + 1>, kMaxBits + 1> c{};
        for (int n = 0; n <= kMaxBits; ++n) {
            c[n][0] = 1;
            for (int k = 1; k <= n; ++k)
                c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0);
        }
        return c;
    }();
    if (k < 0 || k > n || n < 0) return 0;
    return table[n][k];
}

// Sign of moving one fermion operator at site j past the occupied modes
// below it in the ordered-creation convention.
double jw_sign(std::uint32_t bits, int j) {
    const std::uint32_t below = bits & ((std::uint32_t{1} << j) - 1);
    return (std::popcount(below) & 1) ? -1.0 : 1.0;
}

// Rank of a bitstring among all bitstrings with the same popcount, in
// increasing numeric order (combinatorial number system). Independent of the
// total number of sites, so it also ranks subsystem substrings.
std::int64_t rank_combinadic(std::uint32_t bits) {
    std::int64_t r = 0;
    int t = 1;
    while (bits) {
        const int p = std::countr_zero(bits);
        bits &= bits - 1;
        r += binom(p, t);
        ++t;
    }
    return r;
}

double xlogx_local(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

SectorBasis::SectorBasis(int L, int N) : L_(L), N_(N) {
    if (L < 1 || L > kMaxBits) throw SizeLimit("site count out of range");
    if (N < 0 || N > L) throw ConfigError("particle number out of range");
    configs_.reserve(static_cast<std::size_t>(binom(L, N)));
    if (N == 0) {
        configs_.push_back(0);
        return;
    }
    std::uint32_t c = (std::uint32_t{1} << N) - 1;
    const std::uint32_t limit = std::uint32_t{1} << L;
    while (c < limit) {
        configs_.push_back(c);
        // Gosper's hack: next larger integer with the same popcount.
        const std::uint32_t lowest = c & (~c + 1);
        const std::uint32_t ripple = c + lowest;
        c = ripple | (((c ^ ripple) >> 2) / lowest);
    }
}

std::int64_t SectorBasis::rank(std::uint32_t config) const {
    return rank_combinadic(config);
}

SectorBasis half_filling_basis(int L) {
    if (L % 2 != 0) throw OddSize("half filling requires an even site count");
    return SectorBasis(L, L / 2);
}

SparseMatrixXcd build_tv_hamiltonian(int L, double t, double W, double V) {
    if (L % 2 != 0) throw OddSize("chain requires an even site count");
    if (L < 2 || L > 22) throw SizeLimit("supported sizes are 2..22");
    const SectorBasis basis(L, L / 2);
    const std::int64_t dim = basis.dim();

    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(static_cast<std::size_t>(dim) * (L + 1));
    for (std::int64_t ci = 0; ci < dim; ++ci) {
        const std::uint32_t b = basis.unrank(ci);
        double diag = 0.0;
        for (int j = 0; j < L; ++j) {
            const int k = (j + 1) % L;
            const double nj = (b >> j) & 1 ? 1.0 : 0.0;
            const double nk = (b >> k) & 1 ? 1.0 : 0.0;
            // (-1)^j with 1-based site labels.
            diag += W * (j % 2 == 0 ? -1.0 : 1.0) * nj;
            diag += V * (nj - 0.5) * (nk - 0.5);

            // c_j^dag c_k and c_k^dag c_j, each with coefficient -t/2.
            if (t == 0.0) continue;
            if (nk > 0.5 && nj < 0.5) {
                const std::uint32_t b1 = b ^ (std::uint32_t{1} << k);
                const double s = jw_sign(b, k) * jw_sign(b1, j);
                const std::uint32_t b2 = b1 | (std::uint32_t{1} << j);
                triplets.emplace_back(basis.rank(b2), ci,
                                      Complex(-0.5 * t * s, 0.0));
            }
            if (nj > 0.5 && nk < 0.5) {
                const std::uint32_t b1 = b ^ (std::uint32_t{1} << j);
                const double s = jw_sign(b, j) * jw_sign(b1, k);
                const std::uint32_t b2 = b1 | (std::uint32_t{1} << k);
                triplets.emplace_back(basis.rank(b2), ci,
                                      Complex(-0.5 * t * s, 0.0));
            }
        }
        triplets.emplace_back(ci, ci, Complex(diag, 0.0));
    }
    SparseMatrixXcd H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());
    return H;
}

int SykCouplings::pair_index(int i, int j) const {
    // Lexicographic rank of (i < j) among the ordered pairs of L sites.
    return static_cast<int>(rank_combinadic(
        (std::uint32_t{1} << i) | (std::uint32_t{1} << j)));
}

Complex SykCouplings::element(int i, int j, int k, int l) const {
    if (i == j || k == l) return Complex(0.0, 0.0);
    double sign = 1.0;
    if (i > j) {
        std::swap(i, j);
        sign = -sign;
    }
    if (k > l) {
        std::swap(k, l);
        sign = -sign;
    }
    return sign * tensor(pair_index(i, j), pair_index(k, l));
}

SykCouplings sample_syk_couplings(int L, double J, std::uint64_t seed) {
    if (L < 2 || L > 20) throw SizeLimit("supported sizes are 2..20");
    SykCouplings c;
    c.L = L;
    c.J = J;
    c.seed = seed;
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) c.pairs.emplace_back(i, j);
    const int n_pairs = static_cast<int>(c.pairs.size());
    c.tensor = MatrixXcd::Zero(n_pairs, n_pairs);

    // One deterministic stream; canonical entries drawn in row-major order
    // over the upper triangle. The Hermitian constraint J_{ij,kl} =
    // conj(J_{kl,ij}) forces the pair-diagonal real, so those entries take
    // the full variance in the real part.
    NoiseStream stream(seed, 0);
    for (int p = 0; p < n_pairs; ++p) {
        c.tensor(p, p) = Complex(J * stream.gaussian(), 0.0);
        for (int q = p + 1; q < n_pairs; ++q) {
            const double scale = J / std::numbers::sqrt2;
            const Complex z(scale * stream.gaussian(),
                            scale * stream.gaussian());
            c.tensor(p, q) = z;
            c.tensor(q, p) = std::conj(z);
        }
    }
    return c;
}

SparseMatrixXcd build_syk_hamiltonian(const SykCouplings& couplings) {
    const int L = couplings.L;
    if (L < 2 || L > 20) throw SizeLimit("supported sizes are 2..20");
    if (L % 2 != 0) throw OddSize("half filling requires an even site count");
    const SectorBasis basis(L, L / 2);
    const std::int64_t dim = basis.dim();
    const double prefactor = 4.0 / (static_cast<double>(L) * std::sqrt(L));

    // Column-by-column assembly through a dense accumulator. Restricting the
    // coupling sum to ordered pairs (i<j, k<l) collects the four equal sign
    // arrangements of each term into the factor 4 in `prefactor`.
    std::vector<Eigen::Triplet<Complex>> triplets;
    VectorXcd column = VectorXcd::Zero(dim);
    std::vector<std::int64_t> touched;
    std::vector<int> occupied, empty_after;
    for (std::int64_t ci = 0; ci < dim; ++ci) {
        const std::uint32_t b = basis.unrank(ci);
        occupied.clear();
        for (int j = 0; j < L; ++j)
            if ((b >> j) & 1) occupied.push_back(j);

        for (std::size_t ka = 0; ka < occupied.size(); ++ka)
            for (std::size_t la = ka + 1; la < occupied.size(); ++la) {
                const int k = occupied[ka];
                const int l = occupied[la];
                const double sign_ann =
                    jw_sign(b, l) * jw_sign(b ^ (std::uint32_t{1} << l), k);
                const std::uint32_t b2 =
                    b ^ (std::uint32_t{1} << l) ^ (std::uint32_t{1} << k);
                const int q = couplings.pair_index(k, l);

                empty_after.clear();
                for (int j = 0; j < L; ++j)
                    if (!((b2 >> j) & 1)) empty_after.push_back(j);
                for (std::size_t ia = 0; ia < empty_after.size(); ++ia)
                    for (std::size_t ja = ia + 1; ja < empty_after.size();
                         ++ja) {
                        const int i = empty_after[ia];
                        const int j = empty_after[ja];
                        const std::uint32_t b3 = b2 | (std::uint32_t{1} << j);
                        const double sign_cre =
                            jw_sign(b2, j) * jw_sign(b3, i);
                        const std::uint32_t b4 = b3 | (std::uint32_t{1} << i);
                        const Complex coeff =
                            prefactor * sign_ann * sign_cre *
                            couplings.tensor(couplings.pair_index(i, j), q);
                        const std::int64_t row = basis.rank(b4);
                        if (column(row) == Complex(0.0, 0.0))
                            touched.push_back(row);
                        column(row) += coeff;
                    }
            }

        std::sort(touched.begin(), touched.end());
        for (std::int64_t row : touched) {
            triplets.emplace_back(row, ci, column(row));
            column(row) = Complex(0.0, 0.0);
        }
        touched.clear();
    }
    SparseMatrixXcd H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());
    return H;
}

VectorXcd krylov_propagate(const SparseMatrixXcd& H, const VectorXcd& psi,
                           double dt, double tol, int m_max) {
    const std::int64_t dim = psi.size();
    if (H.rows() != dim || H.cols() != dim)
        throw ConfigError("operator and state dimensions disagree");
    if (m_max < 1) throw ConfigError("subspace budget must be positive");
    const int m_cap = static_cast<int>(
        std::min<std::int64_t>(m_max, dim));

    MatrixXcd V(dim, m_cap);
    VectorXd alpha(m_cap), beta(m_cap);
    V.col(0) = psi.normalized();

    for (int j = 0; j < m_cap; ++j) {
        VectorXcd w = H * V.col(j);
        alpha(j) = std::real(V.col(j).dot(w));
        w -= alpha(j) * V.col(j);
        if (j > 0) w -= beta(j - 1) * V.col(j - 1);
        // Full reorthogonalization: subspaces are small, robustness is cheap.
        for (int k = 0; k <= j; ++k) w -= V.col(k).dot(w) * V.col(k);
        beta(j) = w.norm();

        const int m = j + 1;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int r = 0; r < m; ++r) {
            T(r, r) = alpha(r);
            if (r + 1 < m) T(r, r + 1) = T(r + 1, r) = beta(r);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        VectorXcd phases(m);
        for (int r = 0; r < m; ++r)
            phases(r) = std::exp(Complex(0.0, -dt * es.eigenvalues()(r)));
        const VectorXcd y = es.eigenvectors().cast<Complex>() *
                            (phases.array() *
                             es.eigenvectors().row(0).transpose().cast<Complex>().array())
                                .matrix();
        // First neglected term of the subspace expansion.
        const double err = beta(j) * std::abs(y(m - 1));
        if (err < tol || beta(j) < 1e-14 * (1.0 + T.cwiseAbs().maxCoeff())) {
            VectorXcd out = V.leftCols(m) * y;
            out.normalize();
            return out;
        }
        if (m == m_cap)
            throw NoConvergence("subspace budget exhausted before tolerance");
        V.col(j + 1) = w / beta(j);
    }
    throw NoConvergence("subspace budget exhausted before tolerance");
}

VectorXd sector_densities(const VectorXcd& psi, const SectorBasis& basis) {
    VectorXd n = VectorXd::Zero(basis.sites());
    for (std::int64_t ci = 0; ci < basis.dim(); ++ci) {
        const double w = std::norm(psi(ci));
        if (w == 0.0) continue;
        std::uint32_t bits = basis.unrank(ci);
        while (bits) {
            n(std::countr_zero(bits)) += w;
            bits &= bits - 1;
        }
    }
    return n;
}

VectorXcd dephasing_step(const VectorXcd& psi,
                         std::span<const double> increments, double gamma,
                         double dt, const SectorBasis& basis,
                         std::span<const double> expect_pre) {
    const int L = basis.sites();
    if (static_cast<int>(increments.size()) != L ||
        static_cast<int>(expect_pre.size()) != L)
        throw ConfigError("per-site input sized differently from the chain");
    std::vector<double> alpha(L);
    for (int j = 0; j < L; ++j)
        alpha[j] = increments[j] + (2.0 * expect_pre[j] - 1.0) * gamma * dt;

    VectorXd exponent(basis.dim());
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (std::int64_t ci = 0; ci < basis.dim(); ++ci) {
        double s = 0.0;
        std::uint32_t bits = basis.unrank(ci);
        while (bits) {
            s += alpha[std::countr_zero(bits)];
            bits &= bits - 1;
        }
        exponent(ci) = s;
        max_exponent = std::max(max_exponent, s);
    }
    VectorXcd out(basis.dim());
    for (std::int64_t ci = 0; ci < basis.dim(); ++ci)
        out(ci) = psi(ci) * std::exp(exponent(ci) - max_exponent);
    const double norm = out.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw NumericalBreakdown("measurement factor annihilated the state");
    return out / norm;
}

VectorXcd dephasing_step(const VectorXcd& psi,
                         std::span<const double> increments, double gamma,
                         double dt, const SectorBasis& basis) {
    const VectorXd n = sector_densities(psi, basis);
    return dephasing_step(psi, increments, gamma, dt, basis,
                          std::span<const double>(n.data(),
                                                  static_cast<std::size_t>(
                                                      n.size())));
}

double entanglement_entropy_statevector(const VectorXcd& psi,
                                        const SectorBasis& basis, int l) {
    const int L = basis.sites();
    const int N = basis.particles();
    if (l < 1 || l >= L) throw ConfigError("cut length out of range");
    const std::uint32_t mask = (std::uint32_t{1} << l) - 1;

    // Number conservation: the reduced density is block diagonal in the
    // particle count of the kept sites. One amplitude matrix per block.
    const int na_min = std::max(0, N - (L - l));
    const int na_max = std::min(N, l);
    std::vector<MatrixXcd> blocks;
    for (int na = na_min; na <= na_max; ++na)
        blocks.emplace_back(
            MatrixXcd::Zero(binom(l, na), binom(L - l, N - na)));

    for (std::int64_t ci = 0; ci < basis.dim(); ++ci) {
        const std::uint32_t b = basis.unrank(ci);
        const std::uint32_t a = b & mask;
        const std::uint32_t r = b >> l;
        const int na = std::popcount(a);
        blocks[na - na_min](rank_combinadic(a), rank_combinadic(r)) = psi(ci);
    }

    double s = 0.0;
    for (const auto& block : blocks) {
        Eigen::BDCSVD<MatrixXcd> svd(block);
        for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
            s -= xlogx_local(std::pow(svd.singularValues()(k), 2));
    }
    return s;
}

double ipr(const VectorXcd& psi) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        sum += std::pow(std::norm(psi(i)), 2);
    return sum;
}

double page_reference(int L, int n_samples, std::uint64_t seed) {
    const SectorBasis basis = half_filling_basis(L);
    if (n_samples < 1) throw ConfigError("need at least one sample");
    const double amp = 1.0 / std::sqrt(static_cast<double>(basis.dim()));
    double total = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        NoiseStream stream(seed, static_cast<std::uint64_t>(s));
        VectorXcd psi(basis.dim());
        for (std::int64_t ci = 0; ci < basis.dim(); ++ci) {
            const double phi = 2.0 * std::numbers::pi * stream.uniform();
            psi(ci) = amp * Complex(std::cos(phi), std::sin(phi));
        }
        total += entanglement_entropy_statevector(psi, basis, L / 2);
    }
    return total / n_samples;
}

ManyBodyEngine::ManyBodyEngine(SectorBasis basis, SparseMatrixXcd hamiltonian,
                               double gamma, double dt, double krylov_tol,
                               int krylov_m_max)
    : basis_(std::move(basis)),
      hamiltonian_(std::move(hamiltonian)),
      gamma_(gamma),
      dt_(dt),
      krylov_tol_(krylov_tol),
      krylov_m_max_(krylov_m_max) {
    if (hamiltonian_.rows() != basis_.dim() ||
        hamiltonian_.cols() != basis_.dim())
        throw ConfigError("operator and sector dimensions disagree");
    // Staggered initial state: 1-based even sites occupied.
    std::uint32_t neel = 0;
    for (int j = 1; j < basis_.sites(); j += 2) neel |= std::uint32_t{1} << j;
    psi_ = VectorXcd::Zero(basis_.dim());
    psi_(basis_.rank(neel)) = Complex(1.0, 0.0);
}

void ManyBodyEngine::advance(NoiseStream& noise) {
    const VectorXd n_pre = sector_densities(psi_, basis_);
    const auto dw =
        wiener_increments(noise, basis_.sites(), gamma_, dt_);
    psi_ = krylov_propagate(hamiltonian_, psi_, dt_, krylov_tol_,
                            krylov_m_max_);
    psi_ = dephasing_step(psi_, dw, gamma_, dt_, basis_,
                          std::span<const double>(n_pre.data(),
                                                  static_cast<std::size_t>(
                                                      n_pre.size())));
}

void ManyBodyEngine::observe(std::span<const ObservableSpec> what,
                             std::span<double> out) const {
    VectorXd densities;
    for (std::size_t i = 0; i < what.size(); ++i) {
        switch (what[i].kind) {
            case ObservableSpec::Kind::EntropyCut:
                out[i] = entanglement_entropy_statevector(psi_, basis_,
                                                          what[i].index);
                break;
            case ObservableSpec::Kind::Density:
                if (densities.size() == 0)
                    densities = sector_densities(psi_, basis_);
                out[i] = densities(what[i].index - 1);
                break;
            case ObservableSpec::Kind::LnIpr:
                out[i] = std::log(ipr(psi_));
                break;
            default:
                throw EngineError("observable not defined for sector states: " +
                                  what[i].name);
        }
    }
}

ManyBodyEngine make_tv_engine(int L, double t, double W, double V,
                              double gamma, double dt) {
    return ManyBodyEngine(half_filling_basis(L),
                          build_tv_hamiltonian(L, t, W, V), gamma, dt);
}

ManyBodyEngine make_syk_engine(const SykCouplings& couplings, double gamma,
                               double dt) {
    return ManyBodyEngine(half_filling_basis(couplings.L),
                          build_syk_hamiltonian(couplings), gamma, dt);
}

}  // namespace ftraj
