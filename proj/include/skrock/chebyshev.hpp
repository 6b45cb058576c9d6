#pragma once

#include <memory>
#include <utility>
#include <vector>

namespace skrock {

/// First- and second-kind Chebyshev polynomial values at a point,
/// together with the derivatives of T_s needed by the method coefficients.
///
/// Recurrences: T_j = 2x T_{j-1} - T_{j-2} (T_0 = 1, T_1 = x) and
/// U_j = 2x U_{j-1} - U_{j-2} (U_0 = 1, U_1 = 2x). Derivatives follow the
/// differentiated recurrences, exact to rounding at O(s) cost.
struct ChebValues {
    double x = 0.0;
    int s = 0;
    std::vector<double> T;  ///< T_0(x) .. T_s(x)
    std::vector<double> U;  ///< U_0(x) .. U_{s-1}(x)
    double dT = 0.0;        ///< T_s'(x)
    double ddT = 0.0;       ///< T_s''(x)
};

/// Evaluate T_0..T_s, U_0..U_{s-1} and T_s', T_s'' at x.
/// Throws InvalidInput for s < 1 or non-finite x.
ChebValues cheb_eval(double x, int s);

/// (T_s(x), U_{s-1}(x)) without allocating the full arrays.
std::pair<double, double> cheb_T_U(double x, int s);

struct ChebTriple {
    double ts = 0.0;    ///< T_s(x)
    double tsm1 = 0.0;  ///< T_{s-1}(x)
    double usm1 = 0.0;  ///< U_{s-1}(x)
};

ChebTriple cheb_triple(double x, int s);

/// Every per-(s, eta) constant of the stabilized scheme family.
///
/// Stage arrays are indexed by stage number (index 0 unused). Index 1 of
/// nu/kappa holds the stochastic first-stage weights nu1 = s*omega1/2 and
/// kappa1 = s*omega1/omega0; mu[1] = omega1/omega0 is shared with the
/// deterministic recursion. Immutable after construction and safe to share
/// across threads.
struct MethodCoefficients {
    int s = 0;
    double eta = 0.0;
    double omega0 = 0.0;
    double omega1 = 0.0;
    std::vector<double> mu;     ///< mu[1..s]
    std::vector<double> nu;     ///< nu[1..s]; nu[1] = s*omega1/2
    std::vector<double> kappa;  ///< kappa[1..s]; kappa[1] = s*omega1/omega0
    double nu1 = 0.0;
    double kappa1 = 0.0;
    std::vector<double> r;      ///< r[0..s], weak-Taylor recursion
    std::vector<double> delta;  ///< delta[1..s]
    double c = 0.0;             ///< postprocessor amplitude (>= 0)
    double alpha = 0.0;         ///< modified first-stage weight
    double c2 = 0.0, c3 = 0.0, c4 = 0.0;

    // T_s and friends at omega0, kept for the stability functions.
    double ts_w0 = 0.0;    ///< T_s(omega0)
    double tsm1_w0 = 0.0;  ///< T_{s-1}(omega0)
    double usm1_w0 = 0.0;  ///< U_{s-1}(omega0)
    double dts_w0 = 0.0;   ///< T_s'(omega0)
    double ddts_w0 = 0.0;  ///< T_s''(omega0)
};

/// Build all coefficients for s stages and damping eta.
/// Throws InvalidInput (s < 1, eta < 0 or non-finite), CapacityError if
/// T_i(omega0) leaves the double range (reports the failing index), and
/// NumericDomainError if the postprocessor c^2 comes out negative.
MethodCoefficients build_coefficients(int s, double eta);

/// Memoized shared coefficients; one instance per distinct (s, eta).
std::shared_ptr<const MethodCoefficients> cached_coefficients(int s, double eta);

/// Postprocessor constants (c, alpha) for (s, eta).
std::pair<double, double> build_postprocessor(int s, double eta);

/// Omega(eta) = tanh(sqrt(2 eta))/sqrt(2 eta), continuously extended to
/// Omega(0) = 1. Monotone decreasing.
double omega_limit(double eta);

/// Stage count for a stiffness budget: s = [sqrt((h*lambda_max + 1.5) /
/// (2 Omega(eta))) + 0.5], integer rounding with ties to even, floored at 1.
int stage_selection(double h_lambda_max, double eta);

} // namespace skrock
