#include "skrock/cli.hpp"

#include "skrock/errors.hpp"
#include "skrock/monte_carlo.hpp"
#include "skrock/stability.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

namespace skrock {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmtg(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

int env_threads() {
    if (const char* env = std::getenv("SKROCK_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

NoiseKind noise_from_name(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "three-point" || name == "three_point") return NoiseKind::three_point;
    throw InvalidInput("unknown noise kind '" + name + "'");
}

Observable observable_from_name(const std::string& name) {
    if (name == "x1" || name == "identity")
        return [](std::span<const double> x) { return x[0]; };
    if (name == "x2") return [](std::span<const double> x) { return x[0] * x[0]; };
    if (name == "arcsinh") return [](std::span<const double> x) { return std::asinh(x[0]); };
    throw InvalidInput("unknown observable '" + name + "' (use x1, x2, arcsinh)");
}

// Flags shared across the Monte Carlo subcommands.
struct CommonFlags {
    std::string method = "sk_rock";
    std::string problem = "ou";
    std::string noise = "gaussian";
    std::string out_path;
    std::string observable = "x2";
    int s = 1;
    double eta = 0.05;
    bool eta_given = false;
    double T = 1.0;
    std::vector<double> hs;
    long long samples = 10000;
    bool samples_given = false;
    std::uint64_t seed = 12345;
    bool adaptive = false;
    double lambda_max = 0.0;  // 0 = problem default
    bool echo_config = false;

    void attach(CLI::App* cmd, bool with_problem = true) {
        cmd->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
        cmd->add_option("--method", method, "euler_maruyama | sk_rock | psk_rock | s_rock");
        if (with_problem)
            cmd->add_option("--problem", problem,
                            "lintest | pb1 | population | ou | double_well | heat_spde");
        cmd->add_option("--s", s, "stage count (fixed mode)");
        cmd->add_option("--eta", eta, "damping (s_rock default: per-s optimized)")
            ->each([this](const std::string&) { eta_given = true; });
        cmd->add_option("--T", T, "final time");
        cmd->add_option("--h", hs, "stepsize(s); repeat for a ladder");
        cmd->add_option("--samples", samples,
                        "Monte Carlo sample count (default 1e4; 1e5 for invariant ensembles)")
            ->each([this](const std::string&) { samples_given = true; });
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--noise", noise, "gaussian | three-point");
        cmd->add_flag("--adaptive", adaptive, "recompute s each step from h*lambda_max");
        cmd->add_option("--lambda-max", lambda_max, "override the problem's spectral bound");
        cmd->add_option("--out", out_path, "write CSV here instead of stdout");
        cmd->add_flag("--echo-config", echo_config, "print the resolved configuration as JSON");
    }

    IntegratorConfig config() const {
        IntegratorConfig cfg;
        cfg.method = method_from_name(method);
        cfg.eta = eta;
        if (cfg.method == Method::s_rock && !eta_given) cfg.eta = srock_optimal_eta(s);
        cfg.stage_mode = adaptive ? StageMode::adaptive : StageMode::fixed;
        cfg.s = s;
        cfg.noise = noise_from_name(noise);
        return cfg;
    }

    McOptions options() const {
        McOptions opt;
        opt.samples = samples;
        opt.seed = seed;
        opt.threads = env_threads();
        opt.noise = noise_from_name(noise);
        return opt;
    }

    std::string header(const std::string& extra) const {
        std::ostringstream os;
        os << "problem=" << problem << " method=" << method << " s=" << s << " eta=" << fmtg(eta)
           << " T=" << fmtg(T) << " samples=" << samples << " seed=" << seed
           << " noise=" << noise << " adaptive=" << (adaptive ? 1 : 0);
        if (!extra.empty()) os << " " << extra;
        return os.str();
    }

    nlohmann::json json(const std::string& subcommand) const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        j["problem"] = problem;
        j["method"] = method;
        j["s"] = s;
        j["eta"] = eta;
        j["T"] = T;
        j["h"] = hs;
        j["samples"] = samples;
        j["seed"] = seed;
        j["noise"] = noise;
        j["adaptive"] = adaptive;
        j["observable"] = observable;
        j["threads"] = env_threads();
        return j;
    }
};

// Stream sink: --out writes a file, otherwise the provided stream.
class OutSink {
public:
    OutSink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw InvalidInput("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : fallback_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream& fallback_;
};

void write_slope_line(std::ostream& os, const ConvergenceTable& table) {
    std::string line;
    try {
        line = "# fitted_slope=" + fmt17(fit_slope(table));
    } catch (const InsufficientData& e) {
        line = std::string("# fitted_slope=nan (") + e.what() + ")";
    }
    os << line << "\n";
}

ProblemSpec resolve_problem(const CommonFlags& flags) {
    ProblemSpec spec = make_problem(flags.problem);
    if (flags.lambda_max > 0.0) {
        spec.problem.lambda_max = flags.lambda_max;
        spec.problem.local_lambda_max = {};
    }
    return spec;
}

// Analytic weak reference E phi(X(T)) where a closed form exists.
std::optional<double> weak_reference(const ProblemSpec& spec, const std::string& observable,
                                     double T, double lambda, double mu) {
    if (spec.id == "pb1") return {};  // handled pathwise via the exact map
    if (observable != "x2") return {};
    if (spec.id == "lintest") return std::exp((2.0 * lambda + mu * mu) * T);
    if (spec.id == "ou") {
        const double v_inf = spec.stationary_second_moment[0];
        const double x0 = spec.x0[0];
        const double rate = spec.problem.lambda_max.value_or(1.0);
        return v_inf + (x0 * x0 - v_inf) * std::exp(-2.0 * rate * T);
    }
    return {};
}

int run_coeffs(const CommonFlags& flags, bool as_json, std::ostream& out) {
    const auto mc = cached_coefficients(flags.s, flags.eta);
    OutSink sink(flags.out_path, out);
    std::ostream& os = sink.stream();
    if (as_json) {
        nlohmann::json j;
        j["s"] = mc->s;
        j["eta"] = mc->eta;
        j["omega0"] = mc->omega0;
        j["omega1"] = mc->omega1;
        j["nu1"] = mc->nu1;
        j["kappa1"] = mc->kappa1;
        j["c"] = mc->c;
        j["alpha"] = mc->alpha;
        j["c2"] = mc->c2;
        j["c3"] = mc->c3;
        j["c4"] = mc->c4;
        j["mu"] = std::vector<double>(mc->mu.begin() + 1, mc->mu.end());
        j["nu"] = std::vector<double>(mc->nu.begin() + 1, mc->nu.end());
        j["kappa"] = std::vector<double>(mc->kappa.begin() + 1, mc->kappa.end());
        j["r"] = mc->r;
        j["delta"] = std::vector<double>(mc->delta.begin() + 1, mc->delta.end());
        os << j.dump(2) << "\n";
        return 0;
    }
    os << "# s=" << mc->s << " eta=" << fmt17(mc->eta) << "\n";
    os << "name,index,value\n";
    auto scalar = [&](const char* name, double v) { os << name << ",," << fmt17(v) << "\n"; };
    scalar("omega0", mc->omega0);
    scalar("omega1", mc->omega1);
    scalar("nu1", mc->nu1);
    scalar("kappa1", mc->kappa1);
    scalar("c", mc->c);
    scalar("alpha", mc->alpha);
    scalar("c2", mc->c2);
    scalar("c3", mc->c3);
    scalar("c4", mc->c4);
    for (int i = 1; i <= mc->s; ++i) os << "mu," << i << "," << fmt17(mc->mu[i]) << "\n";
    for (int i = 2; i <= mc->s; ++i) os << "nu," << i << "," << fmt17(mc->nu[i]) << "\n";
    for (int i = 2; i <= mc->s; ++i) os << "kappa," << i << "," << fmt17(mc->kappa[i]) << "\n";
    for (int i = 0; i <= mc->s; ++i) os << "r," << i << "," << fmt17(mc->r[i]) << "\n";
    for (int i = 1; i <= mc->s; ++i) os << "delta," << i << "," << fmt17(mc->delta[i]) << "\n";
    return 0;
}

int run_convergence(const CommonFlags& flags, const std::string& kind, std::ostream& out) {
    ProblemSpec spec = resolve_problem(flags);
    IntegratorConfig cfg = flags.config();
    McOptions opt = flags.options();
    std::vector<double> hs = flags.hs;
    if (hs.empty()) hs = {0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
    const Observable phi = observable_from_name(flags.observable);

    ConvergenceTable table;
    if (kind == "strong") {
        table = convergence_table(spec, cfg, flags.T, hs, opt, ErrorKind::strong);
    } else if (kind == "weak") {
        double lambda = -2.0, mu = 1.0;  // registry defaults of lintest
        auto ref = weak_reference(spec, flags.observable, flags.T, lambda, mu);
        table = convergence_table(spec, cfg, flags.T, hs, opt, ErrorKind::weak, phi, ref);
    } else {
        throw InvalidInput("convergence: --kind must be strong or weak");
    }
    OutSink sink(flags.out_path, out);
    write_table_csv(sink.stream(), table,
                    flags.header("kind=" + kind + " observable=" + flags.observable));
    write_slope_line(sink.stream(), table);
    return 0;
}

int run_invariant(const CommonFlags& flags, const std::string& mode_name, double steps,
                  double reference_override, std::ostream& out) {
    ProblemSpec spec = resolve_problem(flags);
    IntegratorConfig cfg = flags.config();
    McOptions opt = flags.options();
    if (!flags.samples_given && mode_name != "time-average") opt.samples = 100000;
    std::vector<double> hs = flags.hs;
    if (hs.empty()) hs = {0.5, 0.25, 0.125, 0.0625};
    const Observable phi = observable_from_name(flags.observable);
    const InvariantMode mode =
        mode_name == "time-average" ? InvariantMode::time_average : InvariantMode::ensemble;

    double reference = reference_override;
    if (std::isnan(reference)) {
        if (flags.observable == "x2" && spec.has_stationary_reference())
            reference = spec.stationary_second_moment[0];
        else
            throw InvalidInput("invariant: no stationary reference; pass --reference");
    }

    ConvergenceTable table;
    if (mode == InvariantMode::ensemble) {
        for (double h : hs) {
            // Snap T to a multiple of h.
            const double T = std::max(1.0, std::round(flags.T / h)) * h;
            McEstimate est = invariant_measure_error(spec, cfg, T, h, mode, opt, phi, reference);
            table.rows.push_back({h, est.value, est.std_error,
                                  est.mean_f_evals * static_cast<double>(est.samples)});
        }
    } else {
        table = invariant_convergence_table(spec, cfg, hs, steps, mode, opt, phi, reference);
    }
    OutSink sink(flags.out_path, out);
    write_table_csv(sink.stream(), table,
                    flags.header("mode=" + mode_name + " observable=" + flags.observable +
                                 " reference=" + fmt17(reference)));
    write_slope_line(sink.stream(), table);
    return 0;
}

int run_spde(const CommonFlags& flags, int n, const std::string& ic_name, bool cost_table,
             std::ostream& out) {
    const auto ic = ic_name == "one" ? HeatInitialCondition::one : HeatInitialCondition::cosine;
    ProblemSpec spec = make_heat_spde(n, ic);
    if (flags.lambda_max > 0.0) spec.problem.lambda_max = flags.lambda_max;
    const double lambda = *spec.problem.lambda_max;
    OutSink sink(flags.out_path, out);
    std::ostream& os = sink.stream();

    if (cost_table) {
        os << "# problem=heat_spde eta=" << fmtg(flags.eta) << " n=" << n
           << " lambda_max=" << fmtg(lambda) << " table=spde-cost\n";
        os << "dt,s_skrock,s_srock,fevals_per_unit_time_skrock,fevals_per_unit_time_srock,ratio\n";
        for (int i = 0; i <= 10; ++i) {
            const double dt = std::ldexp(1.0, -i);
            const int s_sk = stage_selection(dt * lambda, flags.eta);
            const int s_sr = srock_stage_count(dt * lambda);
            const double cost_sk = s_sk / dt;
            const double cost_sr = s_sr / dt;
            os << fmt17(dt) << "," << s_sk << "," << s_sr << "," << fmt17(cost_sk) << ","
               << fmt17(cost_sr) << "," << fmt17(cost_sk / cost_sr) << "\n";
        }
        return 0;
    }

    const double h = flags.hs.empty() ? 0.02 : flags.hs.front();
    IntegratorConfig cfg = flags.config();
    cfg.method = Method::sk_rock;
    cfg.stage_mode = StageMode::adaptive;
    cfg.h = h;
    NoiseStream stream(noise_from_name(flags.noise), flags.seed, 0);
    os << "# problem=heat_spde method=sk_rock adaptive=1 eta=" << fmtg(flags.eta)
       << " h=" << fmtg(h) << " T=" << fmtg(flags.T) << " seed=" << flags.seed << " n=" << n
       << " ic=" << ic_name << " lambda_max=" << fmtg(lambda) << " noise=" << flags.noise
       << "\n";
    os << "step,s,min_u,max_u\n";
    bool all_finite = true;
    StepObserver observer = [&](std::int64_t step, std::span<const double> u, int stages) {
        double lo = u[0], hi = u[0];
        for (double v : u) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if (!std::isfinite(v)) all_finite = false;
        }
        os << step << "," << stages << "," << fmt17(lo) << "," << fmt17(hi) << "\n";
    };
    TrajectorySummary summary = integrate(spec.problem, cfg, spec.x0, flags.T, stream, observer);
    os << "# steps=" << summary.steps << " f_evals=" << summary.f_evals
       << " g_evals=" << summary.g_evals << " all_finite=" << (all_finite ? 1 : 0) << "\n";
    return 0;
}

int run_selftest(std::ostream& out) {
    int failures = 0;
    auto report = [&](const char* name, bool pass, const std::string& detail = "") {
        out << (pass ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) out << " (" << detail << ")";
        out << "\n";
        if (!pass) ++failures;
    };

    {  // coefficient identities across stage counts and dampings
        double worst = 0.0;
        for (int s = 1; s <= 50; ++s) {
            for (double eta : {0.0, 0.05, 0.5, 1.0, 4.0}) {
                const auto mc = cached_coefficients(s, eta);
                for (int i = 2; i <= s; ++i)
                    worst = std::max(worst, std::abs(mc->kappa[i] - (1.0 - mc->nu[i])));
                worst = std::max(worst, std::abs(mc->dts_w0 - s * mc->usm1_w0) /
                                            std::abs(mc->dts_w0));
                worst = std::max(worst, std::abs(mc->c3 - mc->c2 - mc->c * mc->c));
                worst = std::max(worst,
                                 std::abs(mc->c4 - 0.25 - mc->c2 / 2.0 - mc->c * mc->c));
                if (eta == 0.0)
                    worst = std::max(worst, std::abs(mc->c - 0.5 / s));
            }
        }
        report("coefficient identities (s<=50)", worst <= 1e-12, "worst=" + fmt17(worst));
    }
    {  // Pythagorean identity on [-1, 1]
        double worst = 0.0;
        for (int s : {1, 2, 5, 10, 25, 50}) {
            for (int k = 0; k < 1000; ++k) {
                const double x = -1.0 + 2.0 * k / 999.0;
                const auto [t, u] = cheb_T_U(x, s);
                worst = std::max(worst, std::abs(t * t + (1.0 - x * x) * u * u - 1.0));
            }
        }
        report("first/second-kind identity", worst <= 1e-11, "worst=" + fmt17(worst));
    }
    {  // zero-damping wedge bound
        double worst = 0.0;
        for (int s : {1, 2, 5, 10, 25, 50}) {
            const double s2 = static_cast<double>(s) * s;
            for (int k = 1; k <= 10000; ++k) {
                const double p = -2.0 * s2 * k / 10000.0;
                worst = std::max(worst, ms_amplification(p, -2.0 * p, s, 0.0) - 1.0);
            }
        }
        report("optimal wedge bound at eta=0", worst <= 1e-12, "excess=" + fmt17(worst));
    }
    {  // damping estimate ratio stays below one
        double worst = 0.0;
        for (int s = 1; s <= 50; ++s)
            for (double eta = 0.05; eta < 1.0; eta += 0.05)
                worst = std::max(worst, damping_estimate_ratio(s, eta) - 1.0);
        report("damping estimate ratio <= 1", worst <= 0.0, "excess=" + fmt17(worst));
    }
    {  // postprocessed stationary ratio at eta=0
        double worst = 0.0;
        for (int s : {1, 2, 3, 5, 8}) {
            for (int k = 1; k <= 100; ++k) {
                double p = -1.9 * s * s * (k - 0.5) / 100.0;
                auto [a, b] = stab_AB(p, s, 0.0);
                (void)b;
                if (std::abs(a * a - 1.0) < 1e-2) continue;
                worst = std::max(worst, std::abs(ou_postprocessed_ratio(p, s, 0.0) - 1.0));
            }
        }
        report("postprocessed stationary ratio", worst <= 1e-10, "worst=" + fmt17(worst));
    }
    return failures == 0 ? 0 : 1;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Explicit stabilized integrators for stiff SDEs"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);

    CommonFlags flags;

    auto* coeffs_cmd = app.add_subcommand("coeffs", "print method coefficients");
    bool coeffs_json = false;
    flags.attach(coeffs_cmd, false);
    coeffs_cmd->add_flag("--json", coeffs_json, "emit JSON instead of CSV");

    auto* scan_cmd = app.add_subcommand("stability-scan", "mean-square amplification grid");
    flags.attach(scan_cmd, false);
    double scan_pmin = 0.0, scan_q2max = -1.0;
    int scan_pn = 400, scan_qn = 81;
    scan_cmd->add_option("--p-min", scan_pmin, "left end of the p grid (default -2.2 s^2)");
    scan_cmd->add_option("--p-points", scan_pn, "p grid size");
    scan_cmd->add_option("--q2-max", scan_q2max, "top of the q^2 grid (default -2 p_min)");
    scan_cmd->add_option("--q2-points", scan_qn, "q^2 grid size");

    auto* dl_cmd = app.add_subcommand("domain-length", "mean-square stability domain length");
    flags.attach(dl_cmd, false);
    double dl_tol = -1.0;
    dl_cmd->add_option("--tol", dl_tol, "bisection tolerance (default 1e-6 s^2)");

    auto* od_cmd = app.add_subcommand("optimize-damping", "optimal damping for s_rock");
    flags.attach(od_cmd, false);
    double od_lo = 0.0, od_hi = 12.0;
    od_cmd->add_option("--eta-min", od_lo, "lower damping bound");
    od_cmd->add_option("--eta-max", od_hi, "upper damping bound");

    auto* conv_cmd = app.add_subcommand("convergence", "strong/weak error ladder");
    flags.attach(conv_cmd);
    std::string conv_kind = "strong";
    conv_cmd->add_option("--kind", conv_kind, "strong | weak");
    conv_cmd->add_option("--observable", flags.observable, "x1 | x2 | arcsinh (weak)");

    auto* inv_cmd = app.add_subcommand("invariant", "invariant-measure error ladder");
    flags.attach(inv_cmd);
    std::string inv_mode = "ensemble";
    double inv_steps = 1e6;
    double inv_reference = std::nan("");
    inv_cmd->add_option("--mode", inv_mode, "ensemble | time-average");
    inv_cmd->add_option("--steps", inv_steps, "steps per trajectory (time-average)");
    inv_cmd->add_option("--observable", flags.observable, "x1 | x2 | arcsinh");
    inv_cmd->add_option("--reference", inv_reference, "override the stationary reference");

    auto* spde_cmd = app.add_subcommand("spde", "heat-equation run and cost table");
    flags.attach(spde_cmd, false);
    int spde_n = 100;
    std::string spde_ic = "cos";
    bool spde_cost = false;
    spde_cmd->add_option("--n", spde_n, "grid size");
    spde_cmd->add_option("--ic", spde_ic, "cos | one");
    spde_cmd->add_flag("--cost-table", spde_cost, "stage/cost ladder over dt = 2^0..2^-10");

    auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in invariant suites");
    (void)selftest_cmd;

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        const int code = app.exit(e, os, os);
        (code == 0 ? out : err) << os.str();
        return code == 0 ? 0 : 1;
    }

    try {
        if (flags.echo_config) {
            std::string sub = app.get_subcommands().front()->get_name();
            out << flags.json(sub).dump() << "\n";
        }
        if (coeffs_cmd->parsed()) return run_coeffs(flags, coeffs_json, out);
        if (scan_cmd->parsed()) {
            const auto family = method_from_name(flags.method) == Method::s_rock
                                    ? StabilityFamily::s_rock
                                    : StabilityFamily::sk_rock;
            const double s2 = static_cast<double>(flags.s) * flags.s;
            const double pmin = scan_pmin < 0.0 ? scan_pmin : -2.2 * s2;
            const double q2max = scan_q2max >= 0.0 ? scan_q2max : -2.0 * pmin;
            auto scan = scan_amplification(family, flags.s, flags.eta, pmin, scan_pn, q2max,
                                           scan_qn);
            OutSink sink(flags.out_path, out);
            write_scan_csv(sink.stream(), scan);
            return 0;
        }
        if (dl_cmd->parsed()) {
            const auto family = method_from_name(flags.method) == Method::s_rock
                                    ? StabilityFamily::s_rock
                                    : StabilityFamily::sk_rock;
            const double L = domain_length(flags.s, flags.eta, dl_tol, family);
            out << "L=" << fmt17(L) << " L_over_s2="
                << fmt17(L / (static_cast<double>(flags.s) * flags.s)) << "\n";
            return 0;
        }
        if (od_cmd->parsed()) {
            const auto opt = optimize_damping(flags.s, od_lo, od_hi);
            out << "eta_opt=" << fmt17(opt.eta) << " L_opt=" << fmt17(opt.L) << " L_over_s2="
                << fmt17(opt.L / (static_cast<double>(flags.s) * flags.s)) << "\n";
            return 0;
        }
        if (conv_cmd->parsed()) return run_convergence(flags, conv_kind, out);
        if (inv_cmd->parsed()) return run_invariant(flags, inv_mode, inv_steps, inv_reference, out);
        if (spde_cmd->parsed()) return run_spde(flags, spde_n, spde_ic, spde_cost, out);
        if (selftest_cmd->parsed()) return run_selftest(out);
        err << "no subcommand selected\n";
        return 1;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInput& e) {
        err << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const ContractError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace skrock
