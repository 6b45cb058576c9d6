#pragma once

#include "skrock/chebyshev.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace skrock {

/// Which one-step family a stability quantity refers to.
enum class StabilityFamily {
    sk_rock,  ///< noise in the first stage: E|R|^2 = A^2 + B^2 q^2
    s_rock    ///< noise at the final stage: E|R|^2 = A^2 (1 + q^2)
};

/// Drift/diffusion amplification factors of the linear test equation:
/// A(p) = T_s(w0 + w1 p)/T_s(w0), B(p) = U_{s-1}(w0 + w1 p)/U_{s-1}(w0) *
/// (1 + w1 p / 2).
std::pair<double, double> stab_AB(double p, const MethodCoefficients& coeffs);
std::pair<double, double> stab_AB(double p, int s, double eta);

/// Mean-square amplification E|R(p, q, xi)|^2 = A(p)^2 + B(p)^2 q^2.
double ms_amplification(double p, double q2, int s, double eta);

/// Final-stage-noise amplification E|R|^2 = A(p)^2 (1 + q^2).
double srock_amplification(double p, double q2, int s, double eta);

/// Mean-square stability domain length L: the largest a such that the wedge
/// {p in (-a, 0), p + q^2/2 < 0} is stable. Only the boundary q^2 = -2p is
/// scanned (the amplification is nondecreasing in q^2); the first crossing
/// is refined by bisection to `tolerance` (default 1e-6 * s^2).
double domain_length(int s, double eta, double tolerance = -1.0,
                     StabilityFamily family = StabilityFamily::sk_rock);

struct DampingOptimum {
    double eta = 0.0;
    double L = 0.0;
};

/// Damping that maximizes the s_rock domain length: coarse grid
/// (default step 0.05) followed by golden-section refinement.
DampingOptimum optimize_damping(int s, double eta_lo = 0.0, double eta_hi = 12.0,
                                double coarse_step = 0.05,
                                StabilityFamily family = StabilityFamily::s_rock);

/// Memoized optimize_damping(s).eta for the final-stage-noise scheme.
double srock_optimal_eta(int s);

/// Smallest stage count whose optimized-damping s_rock domain covers
/// h*lambda_max (reduced-resolution internal optimizer, memoized).
int srock_stage_count(double h_lambda_max);

/// Stationary-variance ratio of the Ornstein-Uhlenbeck map:
/// R(p) = 2 p B(p)^2 / (A(p)^2 - 1). Requires p < 0 and |A(p)| < 1.
double ou_invariant_ratio(double p, int s, double eta);

/// Postprocessed ratio R(p) - 2 c^2 p (equals 1 identically for eta = 0).
double ou_postprocessed_ratio(double p, int s, double eta);

struct ErgodicityCheck {
    bool holds = false;
    double worst_margin = 0.0;  ///< min over the grid of bound - |A(-lambda h)|
    double worst_lambda = 0.0;
};

/// Check |A(-lambda h)| <= exp(-lambda1 h / (1 + eta)) over an eigenvalue
/// grid. Preconditions: eta > 0, h <= eta/lambda1, h*lambda <= 2/omega1.
ErgodicityCheck ergodicity_bound_check(int s, double eta, std::span<const double> lambda_grid,
                                       double h, double lambda1);

/// For eta = 0 and s > 1: the smallest h > 0 with |A(-lambda1 h)| = 1 and
/// B(-lambda1 h) = 0 (the scheme alternates signs and is not ergodic).
/// Located by bisection to `tolerance`.
double nonergodic_step_witness(int s, double lambda1, double tolerance = 1e-8);

/// Left-hand side of the damping estimate
/// (s^2 w1 / T_s(w0)^2) * (1 - (1 - w1)^2) / (1 - (w0 - w1)^2), which stays
/// <= 1 for moderate eta.
double damping_estimate_ratio(int s, double eta);

/// Grid of mean-square amplification values over the (p, q^2) plane.
struct StabilityScan {
    int s = 0;
    double eta = 0.0;
    std::string method;
    std::vector<double> p_grid;
    std::vector<double> q2_grid;
    std::vector<double> amplification;  ///< row-major, index = ip * nq + iq
    double L = 0.0;
};

StabilityScan scan_amplification(StabilityFamily family, int s, double eta, double p_min,
                                 int p_points, double q2_max, int q2_points);

/// CSV with columns p, q2, amplification (17 significant digits) and a
/// header row naming s, eta and the method.
void write_scan_csv(std::ostream& out, const StabilityScan& scan);

} // namespace skrock
