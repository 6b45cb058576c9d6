#include "skrock/chebyshev.hpp"

#include "skrock/errors.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <unordered_map>

namespace skrock {

namespace {

struct Recurrences {
    std::vector<double> T, U, dT, ddT;
};

// Joint three-term recurrences for T_i, U_i, T_i', T_i'' at one point.
// check_overflow is used when x = omega0 can be large.
Recurrences run_recurrences(double x, int s, bool check_overflow) {
    Recurrences r;
    r.T.assign(s + 1, 0.0);
    r.U.assign(s + 1, 0.0);
    r.dT.assign(s + 1, 0.0);
    r.ddT.assign(s + 1, 0.0);
    r.T[0] = 1.0;
    r.U[0] = 1.0;
    r.T[1] = x;
    r.U[1] = 2.0 * x;
    r.dT[1] = 1.0;
    for (int i = 2; i <= s; ++i) {
        r.T[i] = 2.0 * x * r.T[i - 1] - r.T[i - 2];
        r.U[i] = 2.0 * x * r.U[i - 1] - r.U[i - 2];
        r.dT[i] = 2.0 * r.T[i - 1] + 2.0 * x * r.dT[i - 1] - r.dT[i - 2];
        r.ddT[i] = 4.0 * r.dT[i - 1] + 2.0 * x * r.ddT[i - 1] - r.ddT[i - 2];
        if (check_overflow && !std::isfinite(r.T[i])) {
            throw CapacityError("T_" + std::to_string(i) + "(" + std::to_string(x) +
                                ") overflowed double range (s=" + std::to_string(s) + ")");
        }
    }
    return r;
}

void validate_stage_count(int s) {
    if (s < 1) throw InvalidInput("stage count s must be >= 1, got " + std::to_string(s));
}

} // namespace

ChebValues cheb_eval(double x, int s) {
    validate_stage_count(s);
    if (!std::isfinite(x)) throw InvalidInput("cheb_eval: x is not finite");
    Recurrences rec = run_recurrences(x, s, false);
    ChebValues v;
    v.x = x;
    v.s = s;
    v.T = std::move(rec.T);
    v.U.assign(rec.U.begin(), rec.U.begin() + s);  // U_0 .. U_{s-1}
    v.dT = rec.dT[s];
    v.ddT = rec.ddT[s];
    return v;
}

std::pair<double, double> cheb_T_U(double x, int s) {
    const ChebTriple t = cheb_triple(x, s);
    return {t.ts, t.usm1};
}

ChebTriple cheb_triple(double x, int s) {
    validate_stage_count(s);
    if (s == 1) return {x, 1.0, 1.0};
    double tm2 = 1.0, tm1 = x;        // T_0, T_1
    double um2 = 1.0, um1 = 2.0 * x;  // U_0, U_1
    for (int i = 2; i <= s; ++i) {
        const double t = 2.0 * x * tm1 - tm2;
        tm2 = tm1;
        tm1 = t;
        if (i < s) {  // only need U_{s-1}
            const double u = 2.0 * x * um1 - um2;
            um2 = um1;
            um1 = u;
        }
    }
    return {tm1, tm2, um1};
}

MethodCoefficients build_coefficients(int s, double eta) {
    validate_stage_count(s);
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw InvalidInput("damping eta must be finite and >= 0");

    MethodCoefficients mc;
    mc.s = s;
    mc.eta = eta;
    mc.omega0 = 1.0 + eta / (static_cast<double>(s) * s);
    const Recurrences rec = run_recurrences(mc.omega0, s, true);
    mc.omega1 = rec.T[s] / rec.dT[s];
    mc.ts_w0 = rec.T[s];
    mc.tsm1_w0 = rec.T[s - 1];
    mc.usm1_w0 = rec.U[s - 1];
    mc.dts_w0 = rec.dT[s];
    mc.ddts_w0 = rec.ddT[s];

    const double w0 = mc.omega0, w1 = mc.omega1;
    mc.mu.assign(s + 1, 0.0);
    mc.nu.assign(s + 1, 0.0);
    mc.kappa.assign(s + 1, 0.0);
    mc.mu[1] = w1 / w0;
    mc.nu[1] = s * w1 / 2.0;
    mc.kappa[1] = s * w1 / w0;
    mc.nu1 = mc.nu[1];
    mc.kappa1 = mc.kappa[1];
    for (int i = 2; i <= s; ++i) {
        mc.mu[i] = 2.0 * w1 * rec.T[i - 1] / rec.T[i];
        mc.nu[i] = 2.0 * w0 * rec.T[i - 1] / rec.T[i];
        mc.kappa[i] = -rec.T[i - 2] / rec.T[i];
    }

    // Weak-Taylor f'' recursion: stage i adds Delta_i = mu_i * beta_{i-1}^2,
    // where beta_i = s w1 U_{i-1}(w0)/T_i(w0) is the stage's noise
    // amplification (beta_0 = 0, beta_1 = kappa_1). Delta_1 = mu_1 nu_1^2.
    mc.r.assign(s + 1, 0.0);
    mc.delta.assign(s + 1, 0.0);
    mc.delta[1] = static_cast<double>(s) * s * w1 * w1 * w1 / (4.0 * w0);
    mc.r[1] = mc.delta[1];
    for (int i = 2; i <= s; ++i) {
        const double beta_prev = s * w1 * rec.U[i - 2] / rec.T[i - 1];
        mc.delta[i] = mc.mu[i] * beta_prev * beta_prev;
        mc.r[i] = mc.nu[i] * mc.r[i - 1] + mc.kappa[i] * mc.r[i - 2] + mc.delta[i];
    }

    // Postprocessor constants. c^2 and alpha are chosen so that both order
    // conditions c3 - c2 = c^2 = c4 - 1/4 - c2/2 hold identically. The
    // modified first stage contributes 2 nu1^2 = s^2 w1^2 / 2 per unit alpha
    // to the weak-Taylor f'' coefficient, so c3 = r_s + (s w0 w1 / 2) alpha.
    mc.c2 = w1 * w1 * mc.ddts_w0 / (2.0 * mc.ts_w0);
    mc.c4 = mc.ddts_w0 * w1 / mc.dts_w0 + w1 / 2.0;
    const double c_sq = mc.c4 - 0.25 - mc.c2 / 2.0;
    if (c_sq < 0.0) {
        throw NumericDomainError("postprocessor c^2 is negative: s=" + std::to_string(s) +
                                 " eta=" + std::to_string(eta) + " c^2=" + std::to_string(c_sq));
    }
    mc.c = std::sqrt(c_sq);
    mc.alpha = 2.0 / (s * w0 * w1) * (c_sq + mc.c2 - mc.r[s]);
    mc.c3 = mc.r[s] + s * w0 * w1 / 2.0 * mc.alpha;
    return mc;
}

namespace {

struct CoeffKey {
    int s;
    std::uint64_t eta_bits;
    bool operator==(const CoeffKey&) const = default;
};

struct CoeffKeyHash {
    std::size_t operator()(const CoeffKey& k) const noexcept {
        std::uint64_t h = k.eta_bits * 0x9e3779b97f4a7c15ULL;
        h ^= static_cast<std::uint64_t>(k.s) + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

} // namespace

std::shared_ptr<const MethodCoefficients> cached_coefficients(int s, double eta) {
    static std::mutex mutex;
    static std::unordered_map<CoeffKey, std::shared_ptr<const MethodCoefficients>, CoeffKeyHash> cache;
    std::uint64_t bits;
    std::memcpy(&bits, &eta, sizeof bits);
    const CoeffKey key{s, bits};
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const MethodCoefficients>(build_coefficients(s, eta));
    std::lock_guard<std::mutex> lock(mutex);
    return cache.emplace(key, std::move(built)).first->second;
}

std::pair<double, double> build_postprocessor(int s, double eta) {
    const auto mc = cached_coefficients(s, eta);
    return {mc->c, mc->alpha};
}

double omega_limit(double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw InvalidInput("omega_limit: eta must be finite and >= 0");
    if (eta == 0.0) return 1.0;
    const double x = std::sqrt(2.0 * eta);
    return std::tanh(x) / x;
}

int stage_selection(double h_lambda_max, double eta) {
    if (!(h_lambda_max >= 0.0) || !std::isfinite(h_lambda_max))
        throw InvalidInput("stage_selection: h*lambda_max must be finite and >= 0");
    const double value = std::sqrt((h_lambda_max + 1.5) / (2.0 * omega_limit(eta))) + 0.5;
    // nearbyint rounds ties to even under the default FE_TONEAREST mode
    const int s = static_cast<int>(std::nearbyint(value));
    return s < 1 ? 1 : s;
}

} // namespace skrock
