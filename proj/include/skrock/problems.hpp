#pragma once

#include "skrock/sde.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace skrock {

/// A registered test problem: the SDE, its default initial state and, where
/// available, reference statistics reproducible by an independent oracle.
struct ProblemSpec {
    std::string id;
    SdeProblem problem;
    std::vector<double> x0;
    /// Stationary E X_i^2 per coordinate (closed form or Gibbs quadrature).
    std::vector<double> stationary_second_moment;

    bool has_stationary_reference() const { return !stationary_second_moment.empty(); }
};

/// dX = lambda X dt + mu X dW, X(0) = 1. Mean-square stable iff
/// lambda + mu^2/2 < 0; E X(t)^2 = exp((2 lambda + mu^2) t).
ProblemSpec make_linear_test(double lambda, double mu);

/// dX = (X/4 + sqrt(X^2+1)/2) dt + sqrt((X^2+1)/2) dW, X(0) = 0, with the
/// pathwise solution X(t) = sinh(t/2 + W(t)/sqrt(2)); arcsinh X(t) has mean
/// t/2.
ProblemSpec make_pb1();

/// Two-species population model, d = 2, m = 1:
///   dX = (nu (Y - 1) - lambda1 X (1 - X)) dt - mu1 X (1 - X) dW
///   dY = -lambda2 Y (1 - Y) dt - mu2 Y (1 - Y) dW
/// X(0) = Y(0) = 0.95; lambda_max defaults to |lambda1|.
ProblemSpec make_population(double nu = 2.0, double lambda1 = -100.0, double lambda2 = -1.0,
                            double mu1 = 10.0, double mu2 = 0.5);

/// Ornstein-Uhlenbeck. d = 1: dX = -delta X dt + sigma dW, X(0) = 2, with
/// stationary variance sigma^2/(2 delta). With a spectrum: diagonal drift
/// matrix with the given (negative) eigenvalues.
ProblemSpec make_ou(double delta = 1.0, double sigma = 1.4142135623730951, int d = 1,
                    std::vector<double> spectrum = {});

/// Brownian dynamics in the double-well potential V(x) = (1 - x^2)^2 / 4:
/// dX = (X - X^3) dt + sqrt(2) dW, X(0) = 0. Stationary moments come from
/// the Gibbs quadrature oracle.
ProblemSpec make_double_well();

enum class HeatInitialCondition {
    cosine,  ///< u(0, x) = 5 cos(pi x), compatible with the boundary data
    one      ///< u(0, x) = 1, incompatible (large-damping experiment)
};

/// Finite-difference discretization of the 1-d heat equation with
/// multiplicative space-time noise on [0, 1]: d = m = N, dx = 1/N,
///   du_i = (u_{i+1} - 2 u_i + u_{i-1})/dx^2 dt + u_i/sqrt(dx) dw_i,
/// Dirichlet u_0 = 5 on the left, Neumann ghost u_{N+1} = u_{N-1} on the
/// right. lambda_max = 4/dx^2.
ProblemSpec make_heat_spde(int n, HeatInitialCondition ic = HeatInitialCondition::cosine);

/// Registry by id: "lintest", "pb1", "population", "ou", "double_well",
/// "heat_spde" (built with default parameters).
ProblemSpec make_problem(const std::string& id);
std::vector<std::string> problem_ids();

/// E phi(X) under the Gibbs density rho ~ exp(-2 V(x)/sigma^2) on [a, b]:
/// adaptive trapezoid with node doubling until the relative change is below
/// rel_tol.
double gibbs_expectation(const std::function<double(double)>& potential, double sigma,
                         const std::function<double(double)>& phi, double a = -10.0,
                         double b = 10.0, double rel_tol = 1e-10);

} // namespace skrock
