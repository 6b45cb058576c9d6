#pragma once

#include "skrock/chebyshev.hpp"
#include "skrock/noise.hpp"
#include "skrock/sde.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace skrock {

enum class Method { euler_maruyama, sk_rock, psk_rock, s_rock };
enum class StageMode { fixed, adaptive };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct IntegratorConfig {
    Method method = Method::sk_rock;
    double eta = 0.05;
    StageMode stage_mode = StageMode::fixed;
    int s = 1;          ///< stage count in fixed mode
    double h = 0.0;     ///< stepsize
    NoiseKind noise = NoiseKind::gaussian;
};

struct StepResult {
    std::vector<double> state;
    long f_evals = 0;
    long g_evals = 0;
};

/// One Euler-Maruyama step: x + h f(x) + sum_r g^r(x) dW_r.
StepResult em_step(const SdeProblem& problem, std::span<const double> x, double h,
                   NoiseSource& noise);

/// One step of the noise-in-first-stage stabilized scheme:
///   Q   = sum_r g^r(X0) dW_r
///   K1  = X0 + mu1 h f(X0 + nu1 Q) + kappa1 Q
///   K_i = mu_i h f(K_{i-1}) + nu_i K_{i-1} + kappa_i K_{i-2},  i = 2..s
/// Only two previous stages are kept. f_evals = s.
StepResult skrock_step(const SdeProblem& problem, std::span<const double> x, double h,
                       const MethodCoefficients& coeffs, NoiseSource& noise);

/// skrock_step with the modified first stage
///   K1 += alpha h (f(X0 + nu1 Q) - 2 f(X0) + f(X0 - nu1 Q)),
/// sharing the f(X0 + nu1 Q) evaluation. f_evals = s + 2.
StepResult pskrock_step(const SdeProblem& problem, std::span<const double> x, double h,
                        const MethodCoefficients& coeffs, NoiseSource& noise);

/// Classical stabilized scheme: deterministic Chebyshev stages, noise
/// added at the final stage, X1 = K_s + sum_r g^r(K_s) dW_r. f_evals = s.
StepResult srock_step(const SdeProblem& problem, std::span<const double> x, double h,
                      const MethodCoefficients& coeffs, NoiseSource& noise);

/// Sample postprocessor x + c sigma sqrt(h) xi with fresh xi. Applied only
/// to emitted samples, never fed back into the dynamics. Requires an
/// additive-scalar problem when called through the harness.
std::vector<double> postprocess(std::span<const double> x, double c, double sigma, double h,
                                NoiseSource& noise);

struct TrajectorySummary {
    std::vector<double> state;
    std::optional<std::vector<double>> postprocessed;  ///< psk_rock on additive problems
    long long f_evals = 0;
    long long g_evals = 0;
    long long steps = 0;
    std::vector<double> w_sum;  ///< accumulated increments per channel (= W(T))
};

/// Called after every completed step with the current state and the stage
/// count the step used (1 for Euler-Maruyama).
using StepObserver =
    std::function<void(std::int64_t step, std::span<const double> x, int stages)>;

/// Integrate over [0, T] with T = N h (enforced to 1e-9 relative). In
/// adaptive mode the stage count is recomputed every step from
/// h * lambda_max(X_n); coefficients are memoized per (s, eta).
/// Divergence (non-finite stage) throws DivergenceError with step index.
TrajectorySummary integrate(const SdeProblem& problem, const IntegratorConfig& config,
                            std::span<const double> x0, double T, NoiseSource& noise,
                            const StepObserver& observer = {});

} // namespace skrock
