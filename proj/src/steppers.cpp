#include "skrock/steppers.hpp"

#include "skrock/errors.hpp"

#include <cmath>
#include <string>

namespace skrock {

const char* method_name(Method m) {
    switch (m) {
        case Method::euler_maruyama: return "euler_maruyama";
        case Method::sk_rock: return "sk_rock";
        case Method::psk_rock: return "psk_rock";
        case Method::s_rock: return "s_rock";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "euler_maruyama" || name == "em") return Method::euler_maruyama;
    if (name == "sk_rock" || name == "skrock") return Method::sk_rock;
    if (name == "psk_rock" || name == "pskrock") return Method::psk_rock;
    if (name == "s_rock" || name == "srock") return Method::s_rock;
    throw InvalidInput("unknown method '" + name + "'");
}

namespace {

struct Costs {
    long long f = 0;
    long long g = 0;
};

// Reusable per-trajectory buffers; stage recurrence keeps two stages only.
struct StepContext {
    std::vector<double> dw, q, k, km1, km2, fx, f0, tmp;

    explicit StepContext(const SdeProblem& p) {
        dw.resize(p.m);
        q.resize(p.d);
        k.resize(p.d);
        km1.resize(p.d);
        km2.resize(p.d);
        fx.resize(p.d);
        f0.resize(p.d);
        tmp.resize(p.d);
    }
};

void check_finite(std::span<const double> v, std::int64_t step, int stage) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw DivergenceError(step, stage,
                                  "non-finite state at step " + std::to_string(step) +
                                      ", stage " + std::to_string(stage));
        }
    }
}

// Q = sum_r g^r(x) dW_r per diffusion kind.
void noise_term(const SdeProblem& p, std::span<const double> x, std::span<const double> dw,
                StepContext& ctx, std::vector<double>& q, Costs& costs) {
    switch (p.diffusion_kind) {
        case DiffusionKind::additive_scalar:
            for (int i = 0; i < p.d; ++i) q[i] = p.sigma * dw[i];
            break;
        case DiffusionKind::diagonal:
            p.diffusion_diagonal(x, ctx.tmp);
            ++costs.g;
            for (int i = 0; i < p.d; ++i) q[i] = ctx.tmp[i] * dw[i];
            break;
        case DiffusionKind::general:
            for (int i = 0; i < p.d; ++i) q[i] = 0.0;
            for (int r = 0; r < p.m; ++r) {
                p.diffusion(x, r, ctx.tmp);
                ++costs.g;
                for (int i = 0; i < p.d; ++i) q[i] += ctx.tmp[i] * dw[r];
            }
            break;
    }
}

void em_kernel(const SdeProblem& p, StepContext& ctx, std::vector<double>& x, double h,
               NoiseSource& noise, Costs& costs, std::int64_t step) {
    noise.increments(h, ctx.dw);
    noise_term(p, x, ctx.dw, ctx, ctx.q, costs);
    p.drift(x, ctx.fx);
    ++costs.f;
    for (int i = 0; i < p.d; ++i) x[i] += h * ctx.fx[i] + ctx.q[i];
    check_finite(x, step, 1);
}

// Shared stage recurrence for i = 2..s; km1/km2 hold K_{i-1}, K_{i-2} on
// entry and K_s ends up in km1.
void chebyshev_tail(const SdeProblem& p, const MethodCoefficients& mc, StepContext& ctx,
                    double h, Costs& costs, std::int64_t step) {
    for (int i = 2; i <= mc.s; ++i) {
        p.drift(ctx.km1, ctx.fx);
        ++costs.f;
        const double mu = mc.mu[i], nu = mc.nu[i], kappa = mc.kappa[i];
        for (int j = 0; j < p.d; ++j)
            ctx.k[j] = mu * h * ctx.fx[j] + nu * ctx.km1[j] + kappa * ctx.km2[j];
        check_finite(ctx.k, step, i);
        std::swap(ctx.km2, ctx.km1);
        std::swap(ctx.km1, ctx.k);
    }
}

void skrock_kernel(const SdeProblem& p, const MethodCoefficients& mc, StepContext& ctx,
                   std::vector<double>& x, double h, NoiseSource& noise, Costs& costs,
                   std::int64_t step, bool modified_stage) {
    noise.increments(h, ctx.dw);
    noise_term(p, x, ctx.dw, ctx, ctx.q, costs);
    const double nu1 = mc.nu[1], kappa1 = mc.kappa[1], mu1 = mc.mu[1];

    for (int j = 0; j < p.d; ++j) ctx.tmp[j] = x[j] + nu1 * ctx.q[j];
    p.drift(ctx.tmp, ctx.fx);  // f(X0 + nu1 Q), shared with the alpha bracket
    ++costs.f;
    for (int j = 0; j < p.d; ++j) ctx.km1[j] = x[j] + mu1 * h * ctx.fx[j] + kappa1 * ctx.q[j];

    if (modified_stage) {
        p.drift(x, ctx.f0);
        ++costs.f;
        for (int j = 0; j < p.d; ++j) ctx.tmp[j] = x[j] - nu1 * ctx.q[j];
        p.drift(ctx.tmp, ctx.k);  // f(X0 - nu1 Q); ctx.k free until the tail
        ++costs.f;
        const double ah = mc.alpha * h;
        for (int j = 0; j < p.d; ++j)
            ctx.km1[j] += ah * (ctx.fx[j] - 2.0 * ctx.f0[j] + ctx.k[j]);
    }
    check_finite(ctx.km1, step, 1);

    ctx.km2 = x;
    chebyshev_tail(p, mc, ctx, h, costs, step);
    x = ctx.km1;
}

void srock_kernel(const SdeProblem& p, const MethodCoefficients& mc, StepContext& ctx,
                  std::vector<double>& x, double h, NoiseSource& noise, Costs& costs,
                  std::int64_t step) {
    noise.increments(h, ctx.dw);
    p.drift(x, ctx.fx);
    ++costs.f;
    const double mu1 = mc.mu[1];
    for (int j = 0; j < p.d; ++j) ctx.km1[j] = x[j] + mu1 * h * ctx.fx[j];
    check_finite(ctx.km1, step, 1);
    ctx.km2 = x;
    chebyshev_tail(p, mc, ctx, h, costs, step);
    // X1 = K_s + sum_r g^r(K_{s-1}) dW_r; for s = 1 the noise point is K_1.
    noise_term(p, mc.s == 1 ? ctx.km1 : ctx.km2, ctx.dw, ctx, ctx.q, costs);
    for (int j = 0; j < p.d; ++j) x[j] = ctx.km1[j] + ctx.q[j];
    check_finite(x, step, mc.s);
}

StepResult run_single_step(const SdeProblem& problem, std::span<const double> x, double h,
                           const MethodCoefficients* coeffs, NoiseSource& noise, Method method) {
    if (!(h > 0.0)) throw InvalidInput("step: h must be > 0");
    StepContext ctx(problem);
    Costs costs;
    std::vector<double> state(x.begin(), x.end());
    switch (method) {
        case Method::euler_maruyama:
            em_kernel(problem, ctx, state, h, noise, costs, 0);
            break;
        case Method::sk_rock:
            skrock_kernel(problem, *coeffs, ctx, state, h, noise, costs, 0, false);
            break;
        case Method::psk_rock:
            skrock_kernel(problem, *coeffs, ctx, state, h, noise, costs, 0, true);
            break;
        case Method::s_rock:
            srock_kernel(problem, *coeffs, ctx, state, h, noise, costs, 0);
            break;
    }
    StepResult res;
    res.state = std::move(state);
    res.f_evals = static_cast<long>(costs.f);
    res.g_evals = static_cast<long>(costs.g);
    return res;
}

} // namespace

StepResult em_step(const SdeProblem& problem, std::span<const double> x, double h,
                   NoiseSource& noise) {
    return run_single_step(problem, x, h, nullptr, noise, Method::euler_maruyama);
}

StepResult skrock_step(const SdeProblem& problem, std::span<const double> x, double h,
                       const MethodCoefficients& coeffs, NoiseSource& noise) {
    return run_single_step(problem, x, h, &coeffs, noise, Method::sk_rock);
}

StepResult pskrock_step(const SdeProblem& problem, std::span<const double> x, double h,
                        const MethodCoefficients& coeffs, NoiseSource& noise) {
    return run_single_step(problem, x, h, &coeffs, noise, Method::psk_rock);
}

StepResult srock_step(const SdeProblem& problem, std::span<const double> x, double h,
                      const MethodCoefficients& coeffs, NoiseSource& noise) {
    return run_single_step(problem, x, h, &coeffs, noise, Method::s_rock);
}

std::vector<double> postprocess(std::span<const double> x, double c, double sigma, double h,
                                NoiseSource& noise) {
    if (!(h > 0.0)) throw InvalidInput("postprocess: h must be > 0");
    std::vector<double> xi(x.size());
    noise.postprocess_noise(xi);
    std::vector<double> out(x.begin(), x.end());
    const double amp = c * sigma * std::sqrt(h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += amp * xi[i];
    return out;
}

TrajectorySummary integrate(const SdeProblem& problem, const IntegratorConfig& config,
                            std::span<const double> x0, double T, NoiseSource& noise,
                            const StepObserver& observer) {
    const double h = config.h;
    if (!(h > 0.0)) throw InvalidInput("integrate: config.h must be > 0");
    if (!(T >= 0.0)) throw InvalidInput("integrate: T must be >= 0");
    const double n_real = T / h;
    const auto n_steps = static_cast<std::int64_t>(std::llround(n_real));
    if (std::abs(n_real - static_cast<double>(n_steps)) > 1e-9 * std::max(1.0, n_real))
        throw InvalidInput("integrate: T is not an integer multiple of h");

    const bool adaptive = config.stage_mode == StageMode::adaptive;
    const bool stabilized = config.method != Method::euler_maruyama;
    if (adaptive && config.method == Method::s_rock)
        throw InvalidInput("integrate: adaptive stage selection is not supported for s_rock");
    if (adaptive && !problem.local_lambda_max && !problem.lambda_max)
        throw InvalidInput("integrate: adaptive mode requires a lambda_max bound");

    TrajectorySummary summary;
    summary.state.assign(x0.begin(), x0.end());
    summary.w_sum.assign(problem.m, 0.0);

    std::shared_ptr<const MethodCoefficients> coeffs;
    if (stabilized && !adaptive) coeffs = cached_coefficients(config.s, config.eta);

    StepContext ctx(problem);
    Costs costs;
    for (std::int64_t n = 0; n < n_steps; ++n) {
        if (stabilized && adaptive) {
            const double lam = problem.local_lambda_max ? problem.local_lambda_max(summary.state)
                                                        : *problem.lambda_max;
            const int s = stage_selection(h * lam, config.eta);
            if (!coeffs || coeffs->s != s) coeffs = cached_coefficients(s, config.eta);
        }
        switch (config.method) {
            case Method::euler_maruyama:
                em_kernel(problem, ctx, summary.state, h, noise, costs, n);
                break;
            case Method::sk_rock:
                skrock_kernel(problem, *coeffs, ctx, summary.state, h, noise, costs, n, false);
                break;
            case Method::psk_rock:
                skrock_kernel(problem, *coeffs, ctx, summary.state, h, noise, costs, n, true);
                break;
            case Method::s_rock:
                srock_kernel(problem, *coeffs, ctx, summary.state, h, noise, costs, n);
                break;
        }
        for (int r = 0; r < problem.m; ++r) summary.w_sum[r] += ctx.dw[r];
        if (observer) observer(n, summary.state, stabilized ? coeffs->s : 1);
    }
    summary.steps = n_steps;
    summary.f_evals = costs.f;
    summary.g_evals = costs.g;

    if (config.method == Method::psk_rock &&
        problem.diffusion_kind == DiffusionKind::additive_scalar && n_steps > 0) {
        const double c = coeffs ? coeffs->c : cached_coefficients(config.s, config.eta)->c;
        summary.postprocessed = postprocess(summary.state, c, problem.sigma, h, noise);
    }
    return summary;
}

} // namespace skrock
