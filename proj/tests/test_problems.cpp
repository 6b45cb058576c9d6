#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skrock/chebyshev.hpp"
#include "skrock/errors.hpp"
#include "skrock/noise.hpp"
#include "skrock/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace skrock;

namespace {

// Test-only Jacobi eigenvalue iteration for small symmetric matrices.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const int n = static_cast<int>(a.size());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

} // namespace

TEST_CASE("registry") {
    const auto ids = problem_ids();
    CHECK(ids.size() == 6);
    for (const auto& id : ids) {
        auto spec = make_problem(id);
        CHECK(spec.id == id);
        CHECK(static_cast<int>(spec.x0.size()) == spec.problem.d);
    }
    CHECK_THROWS_AS(make_problem("nope"), InvalidInput);
}

TEST_CASE("linear test problem") {
    auto spec = make_linear_test(-2.0, 1.0);
    std::vector<double> out(1);
    spec.problem.drift(std::vector<double>{3.0}, out);
    CHECK(out[0] == -6.0);
    spec.problem.diffusion(std::vector<double>{3.0}, 0, out);
    CHECK(out[0] == 3.0);
    CHECK(spec.problem.lambda_max.value() == 2.0);
    CHECK(spec.x0[0] == 1.0);
}

TEST_CASE("pb1 exact map and observables") {
    auto spec = make_pb1();
    std::vector<double> w{0.0};
    CHECK(spec.problem.exact(1.0, w)[0] == doctest::Approx(std::sinh(0.5)).epsilon(1e-14));
    CHECK(spec.problem.exact(0.0, w)[0] == 0.0);
    // arcsinh of the exact solution is t/2 + W/sqrt(2)
    w[0] = 0.7;
    CHECK(std::asinh(spec.problem.exact(2.0, w)[0]) ==
          doctest::Approx(1.0 + 0.7 / std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("pb1 exact path satisfies the dynamics to first order") {
    auto spec = make_pb1();
    NoiseStream stream(NoiseKind::gaussian, 40, 0);
    // Euler residual of the exact path over one step shrinks ~ O(h)
    std::vector<double> mean_res;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
        NoiseStream s(NoiseKind::gaussian, 40, 0);
        std::vector<double> dw(1), f(1), g(1);
        double t = 0.0, w = 0.0, acc = 0.0;
        const int steps = 64;
        for (int n = 0; n < steps; ++n) {
            const double x = spec.problem.exact(t, std::vector<double>{w})[0];
            s.increments(h, dw);
            const double x_next = spec.problem.exact(t + h, std::vector<double>{w + dw[0]})[0];
            spec.problem.drift(std::vector<double>{x}, f);
            spec.problem.diffusion(std::vector<double>{x}, 0, g);
            acc += std::abs(x_next - x - h * f[0] - g[0] * dw[0]);
            t += h;
            w += dw[0];
        }
        mean_res.push_back(acc / steps);
    }
    const double slope = std::log2(mean_res[0] / mean_res[2]) / 2.0;
    CHECK(slope >= 0.85);
}

TEST_CASE("population model") {
    auto spec = make_population();
    std::vector<double> out(2);
    // the equilibrium (1, 1) is a fixed point of drift and diffusion
    spec.problem.drift(std::vector<double>{1.0, 1.0}, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    spec.problem.diffusion(std::vector<double>{1.0, 1.0}, 0, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(spec.problem.lambda_max.value() == 100.0);
    CHECK(spec.x0 == std::vector<double>{0.95, 0.95});

    // defaults nu=2, mu2=0.5, lambda2=-1: dY at (x, 0.5) is -0.25
    spec.problem.drift(std::vector<double>{0.95, 0.5}, out);
    CHECK(out[1] == doctest::Approx(0.25).epsilon(1e-14));
    spec.problem.drift(std::vector<double>{0.95, 2.0}, out);
    CHECK(out[0] ==
          doctest::Approx(2.0 * (2.0 - 1.0) + 100.0 * 0.95 * (1.0 - 0.95)).epsilon(1e-13));
}

TEST_CASE("ornstein-uhlenbeck problems") {
    auto spec = make_ou();
    CHECK(spec.stationary_second_moment[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spec.x0[0] == 2.0);
    CHECK(spec.problem.diffusion_kind == DiffusionKind::additive_scalar);

    auto multi = make_ou(0.0, 2.0, 0, {-1.0, -4.0});
    CHECK(multi.problem.d == 2);
    std::vector<double> out(2);
    multi.problem.drift(std::vector<double>{1.0, 1.0}, out);
    CHECK(out[0] == -1.0);
    CHECK(out[1] == -4.0);
    CHECK(multi.stationary_second_moment[1] == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS(make_ou(0.0, 1.0, 1, {1.0}), InvalidInput);
    CHECK_THROWS_AS(make_ou(-1.0, 1.0), InvalidInput);
}

TEST_CASE("double well references") {
    auto spec = make_double_well();
    std::vector<double> out(1);
    for (double root : {-1.0, 0.0, 1.0}) {
        spec.problem.drift(std::vector<double>{root}, out);
        CHECK(std::abs(out[0]) <= 1e-15);
    }
    auto potential = [](double x) {
        const double w = 1.0 - x * x;
        return 0.25 * w * w;
    };
    // symmetry: stationary mean is zero
    const double mean = gibbs_expectation(potential, std::sqrt(2.0), [](double x) { return x; });
    CHECK(std::abs(mean) <= 1e-12);
    // node doubling converged: loose and tight tolerances agree
    const double loose =
        gibbs_expectation(potential, std::sqrt(2.0), [](double x) { return x * x; }, -10, 10, 1e-6);
    CHECK(spec.stationary_second_moment[0] == doctest::Approx(loose).epsilon(1e-6));
    // quadrature oracle sanity on a Gaussian: V = x^2/2, sigma^2 = 2 => E x^2 = 1
    const double gauss = gibbs_expectation([](double x) { return 0.5 * x * x; }, std::sqrt(2.0),
                                           [](double x) { return x * x; });
    CHECK(gauss == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("heat equation discretization") {
    const int n = 100;
    auto spec = make_heat_spde(n);
    CHECK(spec.problem.lambda_max.value() == doctest::Approx(40000.0));
    CHECK(stage_selection(0.02 * spec.problem.lambda_max.value(), 0.05) == 21);

    // constant 5 with zero noise is stationary
    std::vector<double> out(n);
    spec.problem.drift(std::vector<double>(n, 5.0), out);
    for (double v : out) CHECK(std::abs(v) <= 1e-9);

    // initial conditions
    CHECK(spec.x0[n - 1] == doctest::Approx(-5.0).epsilon(1e-12));  // 5 cos(pi)
    auto flat = make_heat_spde(n, HeatInitialCondition::one);
    CHECK(flat.x0 == std::vector<double>(n, 1.0));

    CHECK_THROWS_AS(make_heat_spde(1), InvalidInput);
}

TEST_CASE("heat operator is symmetrizable negative with bounded spectrum") {
    const int n = 24;
    auto spec = make_heat_spde(n);
    const double inv_dx2 = static_cast<double>(n) * n;
    // assemble the linear part column by column: A e_j = drift(e_j) - drift(0)
    std::vector<double> f0(n), col(n);
    spec.problem.drift(std::vector<double>(n, 0.0), f0);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        spec.problem.drift(e, col);
        for (int i = 0; i < n; ++i) a[i][j] = col[i] - f0[i];
    }
    // similarity transform D^{1/2} A D^{-1/2} with D = diag(1,...,1,1/2)
    std::vector<double> d(n, 1.0);
    d[n - 1] = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] *= d[i] / d[j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) CHECK(std::abs(a[i][j] - a[j][i]) <= 1e-9 * inv_dx2);

    const auto ev = jacobi_eigenvalues(a);
    CHECK(ev.front() >= -4.0 * inv_dx2);
    CHECK(ev.back() < 0.0);
}
