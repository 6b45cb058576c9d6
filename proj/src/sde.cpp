#include "skrock/sde.hpp"

#include "skrock/errors.hpp"

#include <cmath>

namespace skrock {

namespace {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

double estimate_lambda_max_linear(const SdeProblem& problem, int iterations, std::uint64_t seed) {
    if (!problem.drift) throw ContractError("estimate_lambda_max_linear: problem has no drift");
    const int d = problem.d;
    std::vector<double> v(d), f0(d), fv(d);
    std::vector<double> zero(d, 0.0);
    problem.drift(zero, f0);

    std::uint64_t state = seed;
    double norm = 0.0;
    for (int i = 0; i < d; ++i) {
        state = splitmix64(state + i + 1);
        v[i] = (static_cast<double>(state >> 11) * 0x1.0p-53) - 0.5;
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;

    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        problem.drift(v, fv);
        double norm2 = 0.0;
        for (int i = 0; i < d; ++i) {
            fv[i] -= f0[i];  // A v for linear drift f(x) = A x + b
            norm2 += fv[i] * fv[i];
        }
        norm2 = std::sqrt(norm2);
        if (norm2 == 0.0) return 0.0;
        lambda = norm2;
        for (int i = 0; i < d; ++i) v[i] = fv[i] / norm2;
    }
    return lambda;
}

} // namespace skrock
