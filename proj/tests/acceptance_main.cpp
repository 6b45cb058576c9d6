// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, not configurable.

#include "skrock/chebyshev.hpp"
#include "skrock/errors.hpp"
#include "skrock/monte_carlo.hpp"
#include "skrock/stability.hpp"
#include "skrock/steppers.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

using namespace skrock;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int index, const char* name, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] criterion %2d: %s (%s; %.1fs)\n", pass ? "PASS" : "FAIL", index, name,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

int threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit(std::uint64_t& state) {
    state = mix(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

// 1. Coefficient identities for s in [1, 50], eta in {0, 0.05, 0.5, 1, 4}.
void criterion_1() {
    Timer timer;
    double worst = 0.0;
    for (int s = 1; s <= 50; ++s) {
        for (double eta : {0.0, 0.05, 0.5, 1.0, 4.0}) {
            const auto mc = cached_coefficients(s, eta);
            for (int i = 2; i <= s; ++i)
                worst = std::max(worst, std::abs(mc->kappa[i] - (1.0 - mc->nu[i])));
            worst = std::max(worst,
                             std::abs(mc->dts_w0 - s * mc->usm1_w0) / std::abs(mc->dts_w0));
            worst = std::max(worst, std::abs(mc->c3 - mc->c2 - mc->c * mc->c));
            worst = std::max(worst, std::abs(mc->c4 - 0.25 - mc->c2 / 2.0 - mc->c * mc->c));
            if (eta == 0.0) worst = std::max(worst, std::abs(mc->c - 0.5 / s));
        }
    }
    report(1, "coefficient identities", worst <= 1e-12, fmt("worst residual %.3g", worst),
           timer.seconds());
}

// 2. Optimal wedge at zero damping: amplification <= 1 + 1e-12 on the
// boundary q^2 = -2p over a 1e4-point grid of [-2 s^2, 0].
void criterion_2() {
    Timer timer;
    double worst = 0.0;
    for (int s : {1, 2, 5, 10, 25, 50}) {
        const double s2 = static_cast<double>(s) * s;
        for (int k = 1; k <= 10000; ++k) {
            const double p = -2.0 * s2 * k / 10000.0;
            worst = std::max(worst, ms_amplification(p, -2.0 * p, s, 0.0) - 1.0);
        }
    }
    report(2, "optimal wedge bound at eta=0", worst <= 1e-12, fmt("max excess %.3g", worst),
           timer.seconds());
}

// 3. Domain lengths at eta = 0.05 for s = 7, 20.
void criterion_3() {
    Timer timer;
    const double l7 = domain_length(7, 0.05) / 49.0;
    const double l20 = domain_length(20, 0.05) / 400.0;
    const bool pass = l7 >= 1.90 && l7 <= 2.00 && l20 >= 1.90 && l20 <= 2.00;
    report(3, "domain length at eta=0.05", pass, fmt("L/s^2 = %.4f, %.4f", l7, l20),
           timer.seconds());
}

// 4. Damping optimizer for the final-stage-noise scheme.
void criterion_4() {
    Timer timer;
    const auto o7 = optimize_damping(7);
    const auto o20 = optimize_damping(20);
    const double r7 = o7.L / 49.0, r20 = o20.L / 400.0;
    const bool pass = o7.eta >= 3.5 && o7.eta <= 4.5 && o20.eta >= 6.0 && o20.eta <= 8.0 &&
                      r7 >= 0.30 && r7 <= 0.40 && r20 >= 0.30 && r20 <= 0.40;
    report(4, "damping optimizer", pass,
           fmt("eta(7)=%.3f L/49=%.3f; eta(20)=%.3f L/400=%.3f", o7.eta, r7, o20.eta, r20),
           timer.seconds());
}

// 5. One stabilized step on the linear test equals the closed-form map.
void criterion_5() {
    Timer timer;
    double worst = 0.0;
    std::uint64_t state = 424242;
    for (int trial = 0; trial < 100; ++trial) {
        const int s = 1 + static_cast<int>(unit(state) * 19.99);
        const double etas[3] = {0.0, 0.05, 1.0};
        const double eta = etas[static_cast<int>(unit(state) * 2.999)];
        const auto mc = cached_coefficients(s, eta);
        const double p = -(1e-3 + 0.95 * 2.0 / mc->omega1 * unit(state));
        const double q2 = 0.9 * (-2.0 * p) * unit(state);
        const double h = 0.01;
        auto spec = make_linear_test(p / h, std::sqrt(q2 / h));

        NoiseStream probe(NoiseKind::gaussian, 77, trial);
        std::vector<double> dw(1);
        probe.increments(h, dw);
        NoiseStream stream(NoiseKind::gaussian, 77, trial);
        const auto res = skrock_step(spec.problem, spec.x0, h, *mc, stream);
        const auto [a, b] = stab_AB(p, *mc);
        const double expected = a + b * std::sqrt(q2 / h) * dw[0];
        worst = std::max(worst,
                         std::abs(res.state[0] - expected) / std::max(1.0, std::abs(expected)));
    }
    report(5, "linear-test equivalence", worst <= 1e-11, fmt("worst relative gap %.3g", worst),
           timer.seconds());
}

// 6. Strong and weak convergence orders on the sinh problem.
void criterion_6() {
    Timer timer;
    auto spec = make_pb1();
    McOptions opt;
    opt.samples = 10000;
    opt.seed = 20260810;
    opt.threads = threads();
    const std::vector<double> hs{0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
    const Observable arcsinh = [](std::span<const double> x) { return std::asinh(x[0]); };
    bool pass = true;
    std::string detail;
    for (int s : {1, 5}) {
        IntegratorConfig cfg;
        cfg.method = Method::sk_rock;
        cfg.s = s;
        cfg.eta = 0.05;
        const auto strong = convergence_table(spec, cfg, 1.0, hs, opt, ErrorKind::strong);
        const auto weak = convergence_table(spec, cfg, 1.0, hs, opt, ErrorKind::weak, arcsinh);
        double strong_slope = std::nan(""), weak_slope = std::nan("");
        try {
            strong_slope = fit_slope(strong);
            weak_slope = fit_slope(weak);
        } catch (const InsufficientData&) {
        }
        pass = pass && strong_slope >= 0.4 && strong_slope <= 0.6 && weak_slope >= 0.75 &&
               weak_slope <= 1.25;
        detail += fmt("s=%d: strong %.3f weak %.3f; ", s, strong_slope, weak_slope);
    }
    report(6, "convergence orders on pb1", pass, detail, timer.seconds());
}

// 7. Exact stationary variance of the postprocessed scheme on the
// Ornstein-Uhlenbeck problem at zero damping, plus the analytic identity.
void criterion_7() {
    Timer timer;
    auto spec = make_ou(1.0, std::sqrt(2.0));
    McOptions opt;
    opt.samples = 100000;
    opt.seed = 7077;
    opt.threads = threads();
    bool pass = true;
    std::string detail;
    for (int s : {1, 5, 10}) {
        IntegratorConfig cfg;
        cfg.method = Method::psk_rock;
        cfg.s = s;
        cfg.eta = 0.0;
        const Observable x2 = [](std::span<const double> x) { return x[0] * x[0]; };
        const auto est = invariant_measure_error(spec, cfg, 10.0, 0.25, InvariantMode::ensemble,
                                                 opt, x2, 1.0);
        const bool ok = est.value <= 3.0 * est.std_error;
        pass = pass && ok;
        detail += fmt("s=%d: |err|=%.2e se=%.2e; ", s, est.value, est.std_error);
    }
    double worst = 0.0;
    for (int s : {1, 5, 10}) {
        int points = 0;
        for (int k = 0; points < 100 && k < 400; ++k) {
            double p = -1.9 * s * s * (k + 0.5) / 400.0;
            const auto [a, b] = stab_AB(p, s, 0.0);
            (void)b;
            if (std::abs(a * a - 1.0) < 1e-2) continue;  // removable poles of the ratio
            ++points;
            worst = std::max(worst, std::abs(ou_postprocessed_ratio(p, s, 0.0) - 1.0));
        }
    }
    pass = pass && worst <= 1e-10;
    detail += fmt("analytic residual %.2e", worst);
    report(7, "postprocessed OU exactness", pass, detail, timer.seconds());
}

// 8. Invariant-measure orders on the double well, time-average mode,
// three-point increments, 1e7 steps per stepsize. Fixed stages s = 3 with
// damping 0.75: a fixed stage count keeps the error constant h-independent,
// and the moderate damping raises the first-order constant above the
// bounded-increment artifacts of the three-point chain at the coarse steps
// (stability margin L(3, 0.75) = 12.4 covers h * lambda(x) with room).
void criterion_8() {
    Timer timer;
    auto spec = make_double_well();
    const double reference = spec.stationary_second_moment[0];
    const std::vector<double> hs{0.5, 0.25, 0.125, 0.0625};
    const double steps = 1e7;
    McOptions opt;
    opt.seed = 88;
    opt.noise = NoiseKind::three_point;
    const Observable x2 = [](std::span<const double> x) { return x[0] * x[0]; };
    bool pass = true;
    std::string detail;
    for (Method method : {Method::psk_rock, Method::sk_rock}) {
        IntegratorConfig cfg;
        cfg.method = method;
        cfg.s = 3;
        cfg.eta = 0.75;
        const auto table = invariant_convergence_table(spec, cfg, hs, steps,
                                                       InvariantMode::time_average, opt, x2,
                                                       reference);
        double slope = std::nan("");
        try {
            slope = fit_slope(table);
        } catch (const InsufficientData&) {
        }
        const bool ok = method == Method::psk_rock ? (slope >= 1.6 && slope <= 2.4)
                                                   : (slope >= 0.75 && slope <= 1.25);
        pass = pass && ok;
        detail += fmt("%s slope %.3f; ", method_name(method), slope);
    }
    report(8, "double-well invariant orders", pass, detail, timer.seconds());
}

// 9. Stiff population dynamics: the stabilized scheme survives where
// Euler-Maruyama blows up.
void criterion_9() {
    Timer timer;
    auto spec = make_population();  // -lambda1 = mu1^2 = 100
    McOptions opt;
    opt.samples = 1000;
    opt.seed = 99;
    opt.threads = threads();
    IntegratorConfig sk;
    sk.method = Method::sk_rock;
    sk.stage_mode = StageMode::adaptive;
    sk.eta = 4.0;
    sk.h = 0.5;
    const long long sk_dead = count_divergent(spec, sk, 5.0, opt);
    IntegratorConfig em;
    em.method = Method::euler_maruyama;
    em.h = 0.5;
    const long long em_dead = count_divergent(spec, em, 5.0, opt);
    const bool pass = sk_dead == 0 && em_dead > 500;
    report(9, "stiff population dynamics", pass,
           fmt("stabilized: %lld/1000 diverged; euler: %lld/1000", sk_dead, em_dead),
           timer.seconds());
}

// 10. Heat-equation system: stage counts, finite realization, cost ratio.
void criterion_10() {
    Timer timer;
    auto spec = make_heat_spde(100);
    const double lambda = spec.problem.lambda_max.value();
    IntegratorConfig cfg;
    cfg.method = Method::sk_rock;
    cfg.stage_mode = StageMode::adaptive;
    cfg.eta = 0.05;
    cfg.h = 0.02;
    NoiseStream stream(NoiseKind::gaussian, 1010, 0);
    int s_min = 1 << 30, s_max = 0;
    bool finite = true;
    integrate(spec.problem, cfg, spec.x0, 1.0, stream,
              [&](std::int64_t, std::span<const double> u, int used) {
                  s_min = std::min(s_min, used);
                  s_max = std::max(s_max, used);
                  for (double v : u) finite = finite && std::isfinite(v);
              });
    const bool stages_ok = s_min >= 21 && s_max <= 22;

    double ratio_large_dt = 0.0;
    for (int i = 10; i >= 0; --i) {
        const double dt = std::ldexp(1.0, -i);
        const int s_sk = stage_selection(dt * lambda, 0.05);
        const int s_sr = srock_stage_count(dt * lambda);
        ratio_large_dt = static_cast<double>(s_sk) / s_sr;  // last iteration is dt = 1
    }
    const bool ratio_ok = std::abs(ratio_large_dt - 1.0 / 2.4) <= 0.4;
    report(10, "heat-equation run and cost ratio", stages_ok && finite && ratio_ok,
           fmt("stages [%d, %d], finite=%d, ratio(dt=1)=%.3f", s_min, s_max, finite ? 1 : 0,
               ratio_large_dt),
           timer.seconds());
}

// 11. Geometric ergodicity bound and the zero-damping witness.
void criterion_11() {
    Timer timer;
    const int s = 10;
    const double eta = 0.05, lambda1 = 1.0, h = eta / lambda1;
    const auto mc = cached_coefficients(s, eta);
    const double lambda_top = 2.0 / (mc->omega1 * h);
    std::vector<double> grid(1000);
    for (int i = 0; i < 1000; ++i) grid[i] = lambda1 + (lambda_top - lambda1) * i / 999.0;
    const auto check = ergodicity_bound_check(s, eta, grid, h, lambda1);

    const double witness = nonergodic_step_witness(5, 1.0, 1e-8);
    const double closed_form = 25.0 * (1.0 - std::cos(std::numbers::pi / 5.0));
    const auto [a, b] = stab_AB(-witness, 5, 0.0);
    (void)b;
    const bool witness_ok =
        std::abs(witness - closed_form) <= 1e-6 && std::abs(std::abs(a) - 1.0) <= 1e-9;
    report(11, "ergodicity bound and witness", check.holds && witness_ok,
           fmt("worst margin %.3e; witness |h-h*|=%.2e", check.worst_margin,
               std::abs(witness - closed_form)),
           timer.seconds());
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (failures == 0) {
        std::printf("acceptance: all 11 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return 1;
}
