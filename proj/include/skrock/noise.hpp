#pragma once

#include <cstdint>
#include <span>

namespace skrock {

enum class NoiseKind {
    gaussian,
    three_point  ///< xi = +-sqrt(3) w.p. 1/6 each, 0 w.p. 2/3
};

/// Source of Wiener increments and postprocessor noise for one trajectory.
class NoiseSource {
public:
    virtual ~NoiseSource() = default;

    /// Fill out with one increment per channel over a step of size h
    /// (mean 0, variance h); advances the step counter.
    virtual void increments(double h, std::span<double> out) = 0;

    /// Fill out with unit-variance postprocessor noise from a substream
    /// independent of the step increments.
    virtual void postprocess_noise(std::span<double> out) = 0;

    virtual NoiseKind kind() const = 0;
};

/// Counter-based stream: every value is a pure function of
/// (seed, trajectory, substream, step, channel), so per-trajectory output is
/// independent of thread scheduling and of how many draws other trajectories
/// made. Single-owner per trajectory.
class NoiseStream final : public NoiseSource {
public:
    NoiseStream(NoiseKind kind, std::uint64_t seed, std::uint64_t trajectory);

    void increments(double h, std::span<double> out) override;
    void postprocess_noise(std::span<double> out) override;

    NoiseKind kind() const override { return kind_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t trajectory() const { return trajectory_; }
    std::uint64_t steps_drawn() const { return step_counter_; }

private:
    double unit_value(std::uint64_t substream, std::uint64_t counter,
                      std::uint64_t channel) const;

    NoiseKind kind_;
    std::uint64_t seed_;
    std::uint64_t trajectory_;
    std::uint64_t base_;  // hashed (seed, trajectory)
    std::uint64_t step_counter_ = 0;
    std::uint64_t post_counter_ = 0;
};

/// Sums groups of `factor` fine increments of a wrapped stream so that a
/// coarse run and a fine run share the same Brownian path (common random
/// numbers for control runs).
class CoarsenedNoise final : public NoiseSource {
public:
    CoarsenedNoise(NoiseStream fine, int factor);

    void increments(double h, std::span<double> out) override;
    void postprocess_noise(std::span<double> out) override;

    NoiseKind kind() const override { return fine_.kind(); }

private:
    NoiseStream fine_;
    int factor_;
};

} // namespace skrock
