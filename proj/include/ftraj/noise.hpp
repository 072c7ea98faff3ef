#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ftraj {

// Counter-based generator: Philox-4x32 with 10 rounds (Salmon et al. 2011).
// A block is addressed by (seed, stream, block index), so any trajectory can
// regenerate its noise without coordination and results are independent of
// how trajectories are scheduled onto workers.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::uint64_t seed,
                                              std::uint64_t stream,
                                              std::uint64_t index);
};

// Identifier of the generator + normal transform, recorded in run manifests
// so archived results stay reproducible if defaults ever change.
inline const std::string kNoiseAlgorithmTag = "philox4x32-10/box-muller";

// One trajectory's private noise source. Gaussians come from Box-Muller on
// 53-bit uniforms (two per counter block); the transform is implemented here
// rather than taken from <random> because libstdc++ does not pin down
// normal_distribution's output sequence.
class NoiseStream {
  public:
    NoiseStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Uniform on (0,1], 53-bit resolution.
    double uniform();
    // Standard normal.
    double gaussian();
    void fill_gaussian(std::span<double> out, double scale);

  private:
    std::uint64_t next_uint64();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;  // consumed
    double cached_gaussian_ = 0.0;
    bool have_cached_ = false;
};

// White-noise increments for one Trotter step: dW_j ~ N(0, gamma*dt),
// independent across sites and steps.
std::vector<double> wiener_increments(NoiseStream& stream, int L, double gamma,
                                      double dt);

}  // namespace ftraj
