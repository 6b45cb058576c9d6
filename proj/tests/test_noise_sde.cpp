#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skrock/errors.hpp"
#include "skrock/noise.hpp"
#include "skrock/problems.hpp"
#include "skrock/sde.hpp"

#include <cmath>
#include <vector>

using namespace skrock;

TEST_CASE("three-point increments match the exact moments") {
    const long n = 1000000;
    NoiseStream stream(NoiseKind::three_point, 7, 0);
    double m1 = 0, m2 = 0, m4 = 0;
    std::vector<double> dw(1);
    for (long i = 0; i < n; ++i) {
        stream.increments(1.0, dw);
        const double xi = dw[0];
        m1 += xi;
        m2 += xi * xi;
        m4 += xi * xi * xi * xi;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    // 3-sigma Monte Carlo bands: Var(xi)=1, Var(xi^2)=2, Var(xi^4)=18
    CHECK(std::abs(m1) <= 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(m2 - 1.0) <= 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(m4 - 3.0) <= 3.0 * std::sqrt(18.0 / n));
}

TEST_CASE("gaussian increments match the exact moments") {
    const long n = 1000000;
    NoiseStream stream(NoiseKind::gaussian, 99, 3);
    double m1 = 0, m2 = 0, m4 = 0;
    std::vector<double> dw(1);
    for (long i = 0; i < n; ++i) {
        stream.increments(1.0, dw);
        const double xi = dw[0];
        m1 += xi;
        m2 += xi * xi;
        m4 += xi * xi * xi * xi;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    CHECK(std::abs(m1) <= 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(m2 - 1.0) <= 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(m4 - 3.0) <= 3.0 * std::sqrt(96.0 / n));
}

TEST_CASE("streams are a pure function of the address") {
    std::vector<double> a(3), b(3);
    {
        NoiseStream s1(NoiseKind::gaussian, 42, 17);
        s1.increments(0.5, a);
    }
    {
        NoiseStream s2(NoiseKind::gaussian, 42, 17);
        s2.increments(0.5, b);
    }
    CHECK(a == b);

    // different trajectory, step or seed give different values
    NoiseStream s3(NoiseKind::gaussian, 42, 18);
    std::vector<double> c(3);
    s3.increments(0.5, c);
    CHECK(a != c);
    s3.increments(0.5, c);
    CHECK(a != c);
}

TEST_CASE("increment variance scales with h") {
    const long n = 100000;
    NoiseStream stream(NoiseKind::gaussian, 5, 1);
    std::vector<double> dw(1);
    double m2 = 0;
    for (long i = 0; i < n; ++i) {
        stream.increments(4.0, dw);
        m2 += dw[0] * dw[0];
    }
    m2 /= n;
    CHECK(m2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("postprocess noise is reproducible and uncorrelated with steps") {
    std::vector<double> a(2), b(2);
    {
        NoiseStream s(NoiseKind::gaussian, 11, 4);
        s.postprocess_noise(a);
    }
    {
        NoiseStream s(NoiseKind::gaussian, 11, 4);
        s.postprocess_noise(b);
    }
    CHECK(a == b);

    const long n = 100000;
    NoiseStream s(NoiseKind::gaussian, 21, 0);
    std::vector<double> dw(1), xi(1);
    double corr = 0;
    for (long i = 0; i < n; ++i) {
        s.increments(1.0, dw);
        s.postprocess_noise(xi);
        corr += dw[0] * xi[0];
    }
    corr /= n;
    CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(n)));
}

TEST_CASE("coarsened noise shares the fine Brownian path") {
    const int factor = 64;
    const double h = 0.5;
    std::vector<double> coarse(2), fine_sum(2, 0.0), dw(2);
    {
        NoiseStream fine(NoiseKind::gaussian, 3, 9);
        CoarsenedNoise coarsened(fine, factor);
        coarsened.increments(h, coarse);
    }
    {
        NoiseStream fine(NoiseKind::gaussian, 3, 9);
        for (int k = 0; k < factor; ++k) {
            fine.increments(h / factor, dw);
            fine_sum[0] += dw[0];
            fine_sum[1] += dw[1];
        }
    }
    CHECK(coarse[0] == doctest::Approx(fine_sum[0]).epsilon(1e-15));
    CHECK(coarse[1] == doctest::Approx(fine_sum[1]).epsilon(1e-15));
}

TEST_CASE("power iteration estimates the linear spectral radius") {
    auto spec = make_ou(0.0, 1.0, 3, {-1.0, -5.0, -40.0});
    const double rho = estimate_lambda_max_linear(spec.problem);
    CHECK(rho == doctest::Approx(40.0).epsilon(1e-6));
}

TEST_CASE("invalid inputs") {
    NoiseStream s(NoiseKind::gaussian, 0, 0);
    std::vector<double> dw(1);
    CHECK_THROWS_AS(s.increments(0.0, dw), InvalidInput);
    CHECK_THROWS_AS(CoarsenedNoise(NoiseStream(NoiseKind::gaussian, 0, 0), 0), InvalidInput);
}
