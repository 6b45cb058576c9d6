#include "skrock/stability.hpp"

#include "skrock/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <unordered_map>

namespace skrock {

namespace {

// Diffusion amplification of the final-stage-noise scheme: the noise term is
// evaluated at K_{s-1}, so it carries T_{s-1}; s = 1 reduces to noise at K_1.
double srock_noise_factor(const ChebTriple& t, const MethodCoefficients& mc) {
    if (mc.s == 1) return t.ts / mc.ts_w0;
    return t.tsm1 / mc.tsm1_w0;
}

// Amplification along the wedge boundary q^2 = -2p.
double boundary_amplification(double p, const MethodCoefficients& mc, StabilityFamily family) {
    const double x = mc.omega0 + mc.omega1 * p;
    const ChebTriple t = cheb_triple(x, mc.s);
    const double a = t.ts / mc.ts_w0;
    if (family == StabilityFamily::s_rock) {
        const double d = srock_noise_factor(t, mc);
        return a * a + d * d * (-2.0 * p);
    }
    const double b = t.usm1 / mc.usm1_w0 * (1.0 + 0.5 * mc.omega1 * p);
    return a * a + b * b * (-2.0 * p);
}

// Exact-arithmetic value is <= 1 inside the domain with equality at interior
// extrema; the slack absorbs recurrence rounding.
constexpr double kViolation = 1.0 + 1e-9;

double domain_length_impl(const MethodCoefficients& mc, double tolerance, StabilityFamily family,
                          int points_per_stage) {
    const int s = mc.s;
    if (tolerance <= 0.0) tolerance = 1e-6 * static_cast<double>(s) * s;
    // Beyond x = -omega0 the drift amplification alone exceeds 1.
    const double p_end = 2.0 * mc.omega0 / mc.omega1 + 1.0;
    const int n = std::max(4000, points_per_stage * s);
    double prev = 0.0;
    double hit = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double p = -p_end * k / n;
        if (boundary_amplification(p, mc, family) > kViolation) {
            hit = p;
            break;
        }
        prev = p;
    }
    if (hit == 0.0) return p_end;  // no violation found in the scanned range
    double lo = prev, hi = hit;    // lo stable, hi violating
    while (lo - hi > tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (boundary_amplification(mid, mc, family) > kViolation)
            hi = mid;
        else
            lo = mid;
    }
    return -0.5 * (lo + hi);
}

// Damping-selection objective for the final-stage-noise scheme: the wedge
// length of the K_s envelope A(p)^2 (1 - 2p). Its balance point reproduces
// the classical per-stage damping table (eta = 3.98 at s = 7, 6.95 at
// s = 20); maximizing the realized K_{s-1} amplification instead drifts to
// larger damping with a hairline stability margin.
double envelope_length(const MethodCoefficients& mc, double tolerance, int points_per_stage) {
    const int s = mc.s;
    const double p_end = 2.0 * mc.omega0 / mc.omega1 + 1.0;
    const int n = std::max(4000, points_per_stage * s);
    auto phi = [&](double p) {
        const auto [ts, usm1] = cheb_T_U(mc.omega0 + mc.omega1 * p, s);
        (void)usm1;
        const double a = ts / mc.ts_w0;
        return a * a * (1.0 - 2.0 * p);
    };
    double prev = 0.0, hit = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double p = -p_end * k / n;
        if (phi(p) > kViolation) {
            hit = p;
            break;
        }
        prev = p;
    }
    if (hit == 0.0) return p_end;
    double lo = prev, hi = hit;
    while (lo - hi > tolerance) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) > kViolation ? hi : lo) = mid;
    }
    return -0.5 * (lo + hi);
}

DampingOptimum optimize_damping_impl(int s, double eta_lo, double eta_hi, double coarse_step,
                                     StabilityFamily family, int points_per_stage) {
    if (!(eta_hi > eta_lo) || !(coarse_step > 0.0))
        throw InvalidInput("optimize_damping: need eta_hi > eta_lo and coarse_step > 0");
    const double scan_tol = 1e-5 * static_cast<double>(s) * s;
    auto objective = [&](double eta) {
        const auto mc = cached_coefficients(s, eta);
        if (family == StabilityFamily::s_rock)
            return envelope_length(*mc, scan_tol, points_per_stage);
        return domain_length_impl(*mc, scan_tol, family, points_per_stage);
    };

    DampingOptimum best{eta_lo, objective(eta_lo)};
    const int n = static_cast<int>(std::ceil((eta_hi - eta_lo) / coarse_step));
    for (int k = 1; k <= n; ++k) {
        const double eta = std::min(eta_lo + k * coarse_step, eta_hi);
        const double L = objective(eta);
        if (L > best.L) best = {eta, L};
    }

    // Golden-section refinement around the best coarse cell.
    double a = std::max(eta_lo, best.eta - coarse_step);
    double b = std::min(eta_hi, best.eta + coarse_step);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 40 && (b - a) > 1e-4; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = objective(x1);
        }
    }
    const double eta_mid = 0.5 * (a + b);
    const double L_mid = objective(eta_mid);
    if (L_mid > best.L) best = {eta_mid, L_mid};
    if (family == StabilityFamily::s_rock) {
        // Report the realized mean-square domain length at the chosen damping.
        best.L = domain_length_impl(*cached_coefficients(s, best.eta), scan_tol, family,
                                    points_per_stage);
    }
    return best;
}

} // namespace

std::pair<double, double> stab_AB(double p, const MethodCoefficients& mc) {
    if (!std::isfinite(p)) throw InvalidInput("stab_AB: p is not finite");
    const double x = mc.omega0 + mc.omega1 * p;
    const auto [ts, usm1] = cheb_T_U(x, mc.s);
    const double a = ts / mc.ts_w0;
    const double b = usm1 / mc.usm1_w0 * (1.0 + 0.5 * mc.omega1 * p);
    return {a, b};
}

std::pair<double, double> stab_AB(double p, int s, double eta) {
    return stab_AB(p, *cached_coefficients(s, eta));
}

double ms_amplification(double p, double q2, int s, double eta) {
    if (q2 < 0.0) throw InvalidInput("ms_amplification: q2 must be >= 0");
    const auto [a, b] = stab_AB(p, s, eta);
    return a * a + b * b * q2;
}

double srock_amplification(double p, double q2, int s, double eta) {
    if (q2 < 0.0) throw InvalidInput("srock_amplification: q2 must be >= 0");
    const auto mc = cached_coefficients(s, eta);
    const ChebTriple t = cheb_triple(mc->omega0 + mc->omega1 * p, s);
    const double a = t.ts / mc->ts_w0;
    const double d = srock_noise_factor(t, *mc);
    return a * a + d * d * q2;
}

double domain_length(int s, double eta, double tolerance, StabilityFamily family) {
    return domain_length_impl(*cached_coefficients(s, eta), tolerance, family, 150);
}

DampingOptimum optimize_damping(int s, double eta_lo, double eta_hi, double coarse_step,
                                StabilityFamily family) {
    return optimize_damping_impl(s, eta_lo, eta_hi, coarse_step, family, 150);
}

double srock_optimal_eta(int s) {
    static std::mutex mutex;
    static std::unordered_map<int, double> cache;
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(s);
        if (it != cache.end()) return it->second;
    }
    const double eta = optimize_damping(s).eta;
    std::lock_guard<std::mutex> lock(mutex);
    return cache.emplace(s, eta).first->second;
}

int srock_stage_count(double h_lambda_max) {
    if (!(h_lambda_max >= 0.0)) throw InvalidInput("srock_stage_count: need h*lambda_max >= 0");
    static std::mutex mutex;
    static std::unordered_map<int, double> L_cache;
    auto L_opt = [&](int s) {
        {
            std::lock_guard<std::mutex> lock(mutex);
            auto it = L_cache.find(s);
            if (it != L_cache.end()) return it->second;
        }
        // Reduced resolution: the stage search only needs L to a few percent.
        const double step = s > 50 ? 1.0 : 0.25;
        const double hi = s > 25 ? 40.0 : 12.0;
        const double L = optimize_damping_impl(s, 0.0, hi, step, StabilityFamily::s_rock, 60).L;
        std::lock_guard<std::mutex> lock(mutex);
        return L_cache.emplace(s, L).first->second;
    };
    int s = std::max(1, static_cast<int>(std::lround(std::sqrt(h_lambda_max / 0.33))));
    while (L_opt(s) < h_lambda_max) ++s;
    while (s > 1 && L_opt(s - 1) >= h_lambda_max) --s;
    return s;
}

double ou_invariant_ratio(double p, int s, double eta) {
    if (!(p < 0.0)) throw InvalidInput("ou_invariant_ratio: p must be < 0");
    const auto [a, b] = stab_AB(p, s, eta);
    if (std::abs(a) >= 1.0)
        throw NumericDomainError("ou_invariant_ratio: |A(p)| >= 1 at p=" + std::to_string(p));
    return 2.0 * p * b * b / (a * a - 1.0);
}

double ou_postprocessed_ratio(double p, int s, double eta) {
    const double c = cached_coefficients(s, eta)->c;
    return ou_invariant_ratio(p, s, eta) - 2.0 * c * c * p;
}

ErgodicityCheck ergodicity_bound_check(int s, double eta, std::span<const double> lambda_grid,
                                       double h, double lambda1) {
    if (!(eta > 0.0)) throw ContractError("ergodicity_bound_check: requires eta > 0");
    if (!(h > 0.0) || !(lambda1 > 0.0))
        throw InvalidInput("ergodicity_bound_check: need h > 0 and lambda1 > 0");
    if (h > eta / lambda1 * (1.0 + 1e-12))
        throw ContractError("ergodicity_bound_check: requires h <= eta/lambda1");
    const auto mc = cached_coefficients(s, eta);
    const double p_cap = 2.0 / mc->omega1 * (1.0 + 1e-12);
    const double bound = std::exp(-lambda1 * h / (1.0 + eta));
    ErgodicityCheck result;
    result.holds = true;
    result.worst_margin = std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid) {
        if (!(lambda > 0.0) || h * lambda > p_cap)
            throw ContractError("ergodicity_bound_check: eigenvalue outside admissible range");
        const auto [a, b] = stab_AB(-lambda * h, *mc);
        (void)b;
        const double margin = bound - std::abs(a);
        if (margin < result.worst_margin) {
            result.worst_margin = margin;
            result.worst_lambda = lambda;
        }
        if (margin < 0.0) result.holds = false;
    }
    return result;
}

double nonergodic_step_witness(int s, double lambda1, double tolerance) {
    if (s < 2) throw InvalidInput("nonergodic_step_witness: requires s > 1");
    if (!(lambda1 > 0.0) || !(tolerance > 0.0))
        throw InvalidInput("nonergodic_step_witness: need lambda1 > 0 and tolerance > 0");
    const double s2 = static_cast<double>(s) * s;
    // |A(-lambda1 h)| = 1 at the extremum of T_s closest to 1, i.e. at the
    // first zero of U_{s-1}(1 - h lambda1 / s^2).
    auto u = [&](double h) { return cheb_T_U(1.0 - h * lambda1 / s2, s).second; };
    const double pi = std::numbers::pi;
    double lo = s2 * (1.0 - std::cos(0.5 * pi / s)) / lambda1;  // U > 0
    double hi = s2 * (1.0 - std::cos(1.5 * pi / s)) / lambda1;  // U < 0
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        (u(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double damping_estimate_ratio(int s, double eta) {
    const auto mc = cached_coefficients(s, eta);
    const double w0 = mc->omega0, w1 = mc->omega1;
    const double num = 1.0 - (1.0 - w1) * (1.0 - w1);
    const double den = 1.0 - (w0 - w1) * (w0 - w1);
    return static_cast<double>(s) * s * w1 / (mc->ts_w0 * mc->ts_w0) * num / den;
}

StabilityScan scan_amplification(StabilityFamily family, int s, double eta, double p_min,
                                 int p_points, double q2_max, int q2_points) {
    if (p_points < 2 || q2_points < 1 || !(p_min < 0.0) || !(q2_max >= 0.0))
        throw InvalidInput("scan_amplification: bad grid parameters");
    StabilityScan scan;
    scan.s = s;
    scan.eta = eta;
    scan.method = family == StabilityFamily::sk_rock ? "sk_rock" : "s_rock";
    scan.p_grid.resize(p_points);
    scan.q2_grid.resize(q2_points);
    scan.amplification.resize(static_cast<std::size_t>(p_points) * q2_points);
    const auto mc = cached_coefficients(s, eta);
    for (int i = 0; i < p_points; ++i)
        scan.p_grid[i] = p_min * (1.0 - static_cast<double>(i) / (p_points - 1));
    for (int j = 0; j < q2_points; ++j)
        scan.q2_grid[j] = q2_points == 1 ? q2_max : q2_max * j / (q2_points - 1);
    for (int i = 0; i < p_points; ++i) {
        const double p = scan.p_grid[i];
        const ChebTriple t = cheb_triple(mc->omega0 + mc->omega1 * p, s);
        const double a = t.ts / mc->ts_w0;
        const double diff = family == StabilityFamily::sk_rock
                                ? t.usm1 / mc->usm1_w0 * (1.0 + 0.5 * mc->omega1 * p)
                                : srock_noise_factor(t, *mc);
        for (int j = 0; j < q2_points; ++j) {
            const double q2 = scan.q2_grid[j];
            scan.amplification[static_cast<std::size_t>(i) * q2_points + j] =
                a * a + diff * diff * q2;
        }
    }
    scan.L = domain_length(s, eta, -1.0, family);
    return scan;
}

void write_scan_csv(std::ostream& out, const StabilityScan& scan) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "# s=%d eta=%g method=%s L=%.17g\n", scan.s, scan.eta,
                  scan.method.c_str(), scan.L);
    out << buf << "p,q2,amplification\n";
    for (std::size_t i = 0; i < scan.p_grid.size(); ++i) {
        for (std::size_t j = 0; j < scan.q2_grid.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", scan.p_grid[i], scan.q2_grid[j],
                          scan.amplification[i * scan.q2_grid.size() + j]);
            out << buf;
        }
    }
}

} // namespace skrock
