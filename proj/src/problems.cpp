#include "skrock/problems.hpp"

#include "skrock/errors.hpp"

#include <cmath>
#include <numbers>

namespace skrock {

namespace {

// Smoke-evaluate drift and diffusion on a pseudo-random state so dimension
// or domain bugs surface at construction.
void validate_spec(const ProblemSpec& spec) {
    const auto& p = spec.problem;
    if (static_cast<int>(spec.x0.size()) != p.d)
        throw ContractError("problem '" + spec.id + "': x0 has wrong dimension");
    std::vector<double> x(p.d), out(p.d);
    for (int i = 0; i < p.d; ++i) x[i] = 0.37 + 0.11 * i - 0.05 * ((i * 7) % 3);
    p.drift(x, out);
    for (double v : out)
        if (!std::isfinite(v)) throw ContractError("problem '" + spec.id + "': drift not finite");
    switch (p.diffusion_kind) {
        case DiffusionKind::general:
            for (int r = 0; r < p.m; ++r) {
                p.diffusion(x, r, out);
                for (double v : out)
                    if (!std::isfinite(v))
                        throw ContractError("problem '" + spec.id + "': diffusion not finite");
            }
            break;
        case DiffusionKind::diagonal:
            p.diffusion_diagonal(x, out);
            for (double v : out)
                if (!std::isfinite(v))
                    throw ContractError("problem '" + spec.id + "': diffusion not finite");
            break;
        case DiffusionKind::additive_scalar:
            if (p.m != p.d)
                throw ContractError("problem '" + spec.id + "': additive noise needs m == d");
            break;
    }
}

} // namespace

ProblemSpec make_linear_test(double lambda, double mu) {
    ProblemSpec spec;
    spec.id = "lintest";
    spec.problem.d = 1;
    spec.problem.m = 1;
    spec.problem.drift = [lambda](std::span<const double> x, std::span<double> out) {
        out[0] = lambda * x[0];
    };
    spec.problem.diffusion = [mu](std::span<const double> x, int, std::span<double> out) {
        out[0] = mu * x[0];
    };
    spec.problem.diffusion_kind = DiffusionKind::general;
    spec.problem.lambda_max = std::abs(lambda);
    spec.x0 = {1.0};
    validate_spec(spec);
    return spec;
}

ProblemSpec make_pb1() {
    ProblemSpec spec;
    spec.id = "pb1";
    spec.problem.d = 1;
    spec.problem.m = 1;
    spec.problem.drift = [](std::span<const double> x, std::span<double> out) {
        out[0] = 0.25 * x[0] + 0.5 * std::sqrt(x[0] * x[0] + 1.0);
    };
    spec.problem.diffusion = [](std::span<const double> x, int, std::span<double> out) {
        out[0] = std::sqrt(0.5 * (x[0] * x[0] + 1.0));
    };
    spec.problem.diffusion_kind = DiffusionKind::general;
    spec.problem.lambda_max = 0.75;  // sup of |d drift/dx| = 1/4 + |x|/(2 sqrt(x^2+1))
    spec.problem.exact = [](double t, std::span<const double> w) {
        return std::vector<double>{std::sinh(0.5 * t + w[0] / std::sqrt(2.0))};
    };
    spec.x0 = {0.0};
    validate_spec(spec);
    return spec;
}

ProblemSpec make_population(double nu, double lambda1, double lambda2, double mu1, double mu2) {
    ProblemSpec spec;
    spec.id = "population";
    spec.problem.d = 2;
    spec.problem.m = 1;
    spec.problem.drift = [nu, lambda1, lambda2](std::span<const double> x, std::span<double> out) {
        out[0] = nu * (x[1] - 1.0) - lambda1 * x[0] * (1.0 - x[0]);
        out[1] = -lambda2 * x[1] * (1.0 - x[1]);
    };
    spec.problem.diffusion = [mu1, mu2](std::span<const double> x, int, std::span<double> out) {
        out[0] = -mu1 * x[0] * (1.0 - x[0]);
        out[1] = -mu2 * x[1] * (1.0 - x[1]);
    };
    spec.problem.diffusion_kind = DiffusionKind::general;
    spec.problem.lambda_max = std::abs(lambda1);
    spec.x0 = {0.95, 0.95};
    validate_spec(spec);
    return spec;
}

ProblemSpec make_ou(double delta, double sigma, int d, std::vector<double> spectrum) {
    ProblemSpec spec;
    spec.id = "ou";
    if (!spectrum.empty()) {
        d = static_cast<int>(spectrum.size());
        for (double ev : spectrum)
            if (!(ev < 0.0)) throw InvalidInput("make_ou: spectrum must be strictly negative");
    } else {
        if (!(delta > 0.0)) throw InvalidInput("make_ou: delta must be > 0");
        spectrum.assign(d, -delta);
    }
    spec.problem.d = d;
    spec.problem.m = d;
    spec.problem.drift = [spectrum](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < spectrum.size(); ++i) out[i] = spectrum[i] * x[i];
    };
    spec.problem.sigma = sigma;
    spec.problem.diffusion_kind = DiffusionKind::additive_scalar;
    double rho = 0.0;
    for (double ev : spectrum) rho = std::max(rho, -ev);
    spec.problem.lambda_max = rho;
    spec.x0.assign(d, 2.0);
    for (double ev : spectrum)
        spec.stationary_second_moment.push_back(sigma * sigma / (-2.0 * ev));
    validate_spec(spec);
    return spec;
}

ProblemSpec make_double_well() {
    ProblemSpec spec;
    spec.id = "double_well";
    spec.problem.d = 1;
    spec.problem.m = 1;
    spec.problem.drift = [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0] - x[0] * x[0] * x[0];
    };
    spec.problem.sigma = std::sqrt(2.0);
    spec.problem.diffusion_kind = DiffusionKind::additive_scalar;
    spec.problem.gibbs_potential = [](std::span<const double> x) {
        const double w = 1.0 - x[0] * x[0];
        return 0.25 * w * w;
    };
    // |V''(x)| = |3x^2 - 1| plus a margin for in-step excursions.
    spec.problem.local_lambda_max = [](std::span<const double> x) {
        return std::abs(3.0 * x[0] * x[0] - 1.0) + 1.0;
    };
    spec.problem.lambda_max = 11.0;  // |V''| over the bulk of the Gibbs mass
    spec.x0 = {0.0};
    auto potential = [](double x) {
        const double w = 1.0 - x * x;
        return 0.25 * w * w;
    };
    spec.stationary_second_moment = {gibbs_expectation(
        potential, spec.problem.sigma, [](double x) { return x * x; })};
    validate_spec(spec);
    return spec;
}

ProblemSpec make_heat_spde(int n, HeatInitialCondition ic) {
    if (n < 2) throw InvalidInput("make_heat_spde: need n >= 2");
    ProblemSpec spec;
    spec.id = "heat_spde";
    spec.problem.d = n;
    spec.problem.m = n;
    const double inv_dx2 = static_cast<double>(n) * n;
    spec.problem.drift = [n, inv_dx2](std::span<const double> u, std::span<double> out) {
        out[0] = (u[1] - 2.0 * u[0] + 5.0) * inv_dx2;  // Dirichlet u_0 = 5
        for (int i = 1; i < n - 1; ++i) out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2;
        out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_dx2;  // Neumann ghost
    };
    const double inv_sqrt_dx = std::sqrt(static_cast<double>(n));
    spec.problem.diffusion_diagonal = [n, inv_sqrt_dx](std::span<const double> u,
                                                       std::span<double> out) {
        for (int i = 0; i < n; ++i) out[i] = u[i] * inv_sqrt_dx;
    };
    spec.problem.diffusion_kind = DiffusionKind::diagonal;
    spec.problem.lambda_max = 4.0 * inv_dx2;
    spec.x0.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / n;
        spec.x0[i] = ic == HeatInitialCondition::cosine ? 5.0 * std::cos(std::numbers::pi * x) : 1.0;
    }
    validate_spec(spec);
    return spec;
}

ProblemSpec make_problem(const std::string& id) {
    if (id == "lintest") return make_linear_test(-2.0, 1.0);
    if (id == "pb1") return make_pb1();
    if (id == "population") return make_population();
    if (id == "ou") return make_ou();
    if (id == "double_well") return make_double_well();
    if (id == "heat_spde") return make_heat_spde(100);
    std::string known;
    for (const auto& k : problem_ids()) known += " " + k;
    throw InvalidInput("unknown problem id '" + id + "'; known:" + known);
}

std::vector<std::string> problem_ids() {
    return {"lintest", "pb1", "population", "ou", "double_well", "heat_spde"};
}

double gibbs_expectation(const std::function<double(double)>& potential, double sigma,
                         const std::function<double(double)>& phi, double a, double b,
                         double rel_tol) {
    if (!(b > a) || !(sigma > 0.0) || !(rel_tol > 0.0))
        throw InvalidInput("gibbs_expectation: bad parameters");
    const double beta = 2.0 / (sigma * sigma);
    auto weight = [&](double x) { return std::exp(-beta * potential(x)); };
    auto trapezoid = [&](long n, double& num, double& den) {
        const double dx = (b - a) / n;
        num = 0.5 * (phi(a) * weight(a) + phi(b) * weight(b));
        den = 0.5 * (weight(a) + weight(b));
        for (long i = 1; i < n; ++i) {
            const double x = a + i * dx;
            const double w = weight(x);
            num += phi(x) * w;
            den += w;
        }
        num *= dx;
        den *= dx;
    };
    double num = 0.0, den = 0.0;
    trapezoid(64, num, den);
    double prev = num / den;
    for (long n = 128; n <= (1L << 24); n *= 2) {
        trapezoid(n, num, den);
        const double cur = num / den;
        if (std::abs(cur - prev) <= rel_tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

} // namespace skrock
