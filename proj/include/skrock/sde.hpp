#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace skrock {

using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Diffusion column g^r(x) for one Wiener channel r.
using ChannelDiffusionFn =
    std::function<void(std::span<const double> x, int channel, std::span<double> out)>;
/// Diagonal diffusion: out[i] multiplies dW_i.
using DiagonalDiffusionFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Pathwise exact solution as a function of time and the Brownian values W(t).
using ExactSolutionFn = std::function<std::vector<double>(double t, std::span<const double> w)>;
using PotentialFn = std::function<double(std::span<const double> x)>;
/// State-dependent spectral-radius bound for the drift Jacobian.
using LocalSpectralBoundFn = std::function<double(std::span<const double> x)>;

enum class DiffusionKind { general, additive_scalar, diagonal };

/// Ito problem dX = f(X) dt + sum_r g^r(X) dW_r. Immutable and shareable.
///
/// Exactly one diffusion representation is used, per diffusion_kind:
///  - general:         `diffusion` (one callback per channel)
///  - additive_scalar: constant sigma on every channel (m == d)
///  - diagonal:        `diffusion_diagonal`, channel r drives coordinate r
struct SdeProblem {
    int d = 1;  ///< state dimension
    int m = 1;  ///< number of Wiener channels
    DriftFn drift;
    ChannelDiffusionFn diffusion;
    DiagonalDiffusionFn diffusion_diagonal;
    double sigma = 0.0;
    DiffusionKind diffusion_kind = DiffusionKind::general;
    std::optional<double> lambda_max;       ///< user-supplied spectral-radius bound
    LocalSpectralBoundFn local_lambda_max;  ///< optional per-state bound
    ExactSolutionFn exact;
    PotentialFn gibbs_potential;
};

/// Power-iteration estimate of the drift Jacobian spectral radius for
/// problems with *linear* drift (A v = f(v) - f(0)).
double estimate_lambda_max_linear(const SdeProblem& problem, int iterations = 100,
                                  std::uint64_t seed = 0);

} // namespace skrock
