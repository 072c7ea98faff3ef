#include "ftraj/noise.hpp"

#include <cmath>

namespace ftraj {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWey0 = 0x9E3779B9u;
constexpr std::uint32_t kWey1 = 0xBB67AE85u;

inline std::uint32_t mulhi32(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)) >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::uint64_t seed,
                                               std::uint64_t stream,
                                               std::uint64_t index) {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);

    for (int round = 0; round < 10; ++round) {
        const std::uint32_t hi0 = mulhi32(kMul0, c0);
        const std::uint32_t lo0 = kMul0 * c0;
        const std::uint32_t hi1 = mulhi32(kMul1, c2);
        const std::uint32_t lo1 = kMul1 * c2;
        const std::uint32_t n0 = hi1 ^ c1 ^ k0;
        const std::uint32_t n1 = lo1;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1;
        const std::uint32_t n3 = lo0;
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
        k0 += kWey0;
        k1 += kWey1;
    }
    return {c0, c1, c2, c3};
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

std::uint64_t NoiseStream::next_uint64() {
    if (buf_pos_ >= 4) {
        buf_ = Philox4x32::block(seed_, stream_id_, block_++);
        buf_pos_ = 0;
    }
    const std::uint64_t lo = buf_[buf_pos_];
    const std::uint64_t hi = buf_[buf_pos_ + 1];
    buf_pos_ += 2;
    return lo | (hi << 32);
}

double NoiseStream::uniform() {
    // Top 53 bits -> [0,1); flip to (0,1] so log() is always finite.
    const double u = static_cast<double>(next_uint64() >> 11) * 0x1.0p-53;
    return 1.0 - u;
}

double NoiseStream::gaussian() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_gaussian_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_gaussian_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
}

void NoiseStream::fill_gaussian(std::span<double> out, double scale) {
    for (double& x : out) x = scale * gaussian();
}

std::vector<double> wiener_increments(NoiseStream& stream, int L, double gamma,
                                      double dt) {
    std::vector<double> dw(static_cast<std::size_t>(L));
    if (gamma == 0.0) return dw;  // degenerate variance: exactly zero
    stream.fill_gaussian(dw, std::sqrt(gamma * dt));
    return dw;
}

}  // namespace ftraj
