#include "skrock/noise.hpp"

#include "skrock/errors.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace skrock {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform on the open interval (0, 1); safe for log().
inline double uniform_open(std::uint64_t word) {
    return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

NoiseStream::NoiseStream(NoiseKind kind, std::uint64_t seed, std::uint64_t trajectory)
    : kind_(kind), seed_(seed), trajectory_(trajectory) {
    base_ = splitmix64(splitmix64(seed) ^ trajectory);
}

double NoiseStream::unit_value(std::uint64_t substream, std::uint64_t counter,
                               std::uint64_t channel) const {
    const std::uint64_t k = splitmix64(base_ ^ (substream * 0xda942042e4dd58b5ULL + counter));
    const std::uint64_t w0 = splitmix64(k ^ (channel << 1));
    if (kind_ == NoiseKind::three_point) {
        const double u = uniform_open(w0);
        constexpr double root3 = 1.7320508075688772;
        if (u < 1.0 / 6.0) return -root3;
        if (u < 1.0 / 3.0) return root3;
        return 0.0;
    }
    const std::uint64_t w1 = splitmix64(k ^ ((channel << 1) | 1u));
    const double u1 = uniform_open(w0);
    const double u2 = uniform_open(w1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void NoiseStream::increments(double h, std::span<double> out) {
    if (!(h > 0.0)) throw InvalidInput("NoiseStream::increments: h must be > 0");
    const double scale = std::sqrt(h);
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] = scale * unit_value(0, step_counter_, r);
    ++step_counter_;
}

void NoiseStream::postprocess_noise(std::span<double> out) {
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] = unit_value(1, post_counter_, r);
    ++post_counter_;
}

CoarsenedNoise::CoarsenedNoise(NoiseStream fine, int factor)
    : fine_(fine), factor_(factor) {
    if (factor < 1) throw InvalidInput("CoarsenedNoise: factor must be >= 1");
}

void CoarsenedNoise::increments(double h, std::span<double> out) {
    const double h_fine = h / factor_;
    std::vector<double> fine_dw(out.size());
    for (auto& v : out) v = 0.0;
    for (int k = 0; k < factor_; ++k) {
        fine_.increments(h_fine, fine_dw);
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += fine_dw[r];
    }
}

void CoarsenedNoise::postprocess_noise(std::span<double> out) {
    fine_.postprocess_noise(out);
}

} // namespace skrock
