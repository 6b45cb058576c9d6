#include "skrock/monte_carlo.hpp"

#include "skrock/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

namespace skrock {

namespace {

// Static trajectory partition; results land in index-addressed slots, so any
// thread count yields bit-identical output.
void parallel_trajectories(long long n, int threads,
                           const std::function<void(long long)>& body) {
    threads = std::max(1, threads);
    if (threads == 1 || n < 2 * threads) {
        for (long long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
        const long long lo = n * t / threads;
        const long long hi = n * (t + 1) / threads;
        pool.emplace_back([&, lo, hi] {
            try {
                for (long long i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double pairwise_sum_impl(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

struct SampleStats {
    double mean = 0.0;
    double sd = 0.0;
    long long n = 0;
};

SampleStats stats_of(std::span<const double> values) {
    SampleStats st;
    st.n = static_cast<long long>(values.size());
    if (st.n == 0) return st;
    st.mean = pairwise_sum_impl(values.data(), values.size()) / static_cast<double>(st.n);
    if (st.n < 2) return st;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - st.mean;
        sq[i] = d * d;
    }
    st.sd = std::sqrt(pairwise_sum_impl(sq.data(), sq.size()) / static_cast<double>(st.n - 1));
    return st;
}

struct EnsembleResult {
    std::vector<double> samples;  // finite trajectories only, in index order
    long long diverged = 0;
    double mean_f = 0.0, mean_g = 0.0;
};

// per_traj returns the sample value for one finished trajectory.
EnsembleResult run_ensemble(
    const ProblemSpec& spec, const IntegratorConfig& config, double T, const McOptions& options,
    const std::function<double(const TrajectorySummary&, NoiseStream&)>& per_traj) {
    const long long m = options.samples;
    std::vector<double> vals(m);
    std::vector<double> fe(m, 0.0), ge(m, 0.0);
    std::vector<char> ok(m, 0);
    parallel_trajectories(m, options.threads, [&](long long i) {
        NoiseStream stream(options.noise, options.seed, static_cast<std::uint64_t>(i));
        try {
            TrajectorySummary summary = integrate(spec.problem, config, spec.x0, T, stream);
            fe[i] = static_cast<double>(summary.f_evals);
            ge[i] = static_cast<double>(summary.g_evals);
            vals[i] = per_traj(summary, stream);
            ok[i] = 1;
        } catch (const DivergenceError&) {
            ok[i] = 0;
        }
    });
    EnsembleResult res;
    res.samples.reserve(m);
    for (long long i = 0; i < m; ++i) {
        if (ok[i])
            res.samples.push_back(vals[i]);
        else
            ++res.diverged;
    }
    res.mean_f = stats_of(fe).mean;
    res.mean_g = stats_of(ge).mean;
    return res;
}

McEstimate estimate_from(const EnsembleResult& res,
                         const std::function<double(const SampleStats&)>& value) {
    const SampleStats st = stats_of(res.samples);
    McEstimate est;
    est.value = value(st);
    est.raw = st.mean;
    est.std_error = st.n > 1 ? st.sd / std::sqrt(static_cast<double>(st.n)) : 0.0;
    est.samples = st.n;
    est.mean_f_evals = res.mean_f;
    est.mean_g_evals = res.mean_g;
    est.diverged = res.diverged;
    return est;
}

std::vector<double> exact_state(const ProblemSpec& spec, double T,
                                const TrajectorySummary& summary) {
    return spec.problem.exact(T, summary.w_sum);
}

} // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_sum_impl(values.data(), values.size());
}

McEstimate strong_error(const ProblemSpec& spec, const IntegratorConfig& config, double T,
                        double h, const McOptions& options) {
    if (!spec.problem.exact)
        throw ContractError("strong_error: problem '" + spec.id + "' has no exact solution");
    if (options.noise != NoiseKind::gaussian)
        throw ContractError("strong_error: pathwise comparison requires gaussian increments");
    IntegratorConfig cfg = config;
    cfg.h = h;
    auto res = run_ensemble(spec, cfg, T, options,
                            [&](const TrajectorySummary& summary, NoiseStream&) {
                                const auto xe = exact_state(spec, T, summary);
                                double s2 = 0.0;
                                for (std::size_t i = 0; i < xe.size(); ++i) {
                                    const double d = summary.state[i] - xe[i];
                                    s2 += d * d;
                                }
                                return std::sqrt(s2);
                            });
    return estimate_from(res, [](const SampleStats& st) { return st.mean; });
}

McEstimate weak_error(const ProblemSpec& spec, const IntegratorConfig& config, double T, double h,
                      const McOptions& options, const Observable& phi,
                      std::optional<double> reference) {
    IntegratorConfig cfg = config;
    cfg.h = h;
    if (spec.problem.exact) {
        // Common-path differences: unbiased for the weak error, with the
        // variance of the pathwise difference instead of the observable.
        auto res = run_ensemble(spec, cfg, T, options,
                                [&](const TrajectorySummary& summary, NoiseStream&) {
                                    const auto xe = exact_state(spec, T, summary);
                                    return phi(summary.state) - phi(xe);
                                });
        return estimate_from(res,
                             [](const SampleStats& st) { return std::abs(st.mean); });
    }
    if (reference) {
        auto res = run_ensemble(spec, cfg, T, options,
                                [&](const TrajectorySummary& summary, NoiseStream&) {
                                    return phi(summary.state);
                                });
        return estimate_from(res, [&](const SampleStats& st) {
            return std::abs(st.mean - *reference);
        });
    }
    // Control run at h/64 on the same Brownian path.
    constexpr int kFactor = 64;
    IntegratorConfig fine_cfg = cfg;
    fine_cfg.h = h / kFactor;
    const long long m = options.samples;
    std::vector<double> diff(m);
    std::vector<double> fe(m, 0.0), ge(m, 0.0);
    std::vector<char> ok(m, 0);
    parallel_trajectories(m, options.threads, [&](long long i) {
        try {
            NoiseStream fine(options.noise, options.seed, static_cast<std::uint64_t>(i));
            CoarsenedNoise coarse(fine, kFactor);
            TrajectorySummary sc = integrate(spec.problem, cfg, spec.x0, T, coarse);
            NoiseStream fine2(options.noise, options.seed, static_cast<std::uint64_t>(i));
            TrajectorySummary sf = integrate(spec.problem, fine_cfg, spec.x0, T, fine2);
            diff[i] = phi(sc.state) - phi(sf.state);
            fe[i] = static_cast<double>(sc.f_evals);
            ge[i] = static_cast<double>(sc.g_evals);
            ok[i] = 1;
        } catch (const DivergenceError&) {
            ok[i] = 0;
        }
    });
    EnsembleResult res;
    for (long long i = 0; i < m; ++i) {
        if (ok[i])
            res.samples.push_back(diff[i]);
        else
            ++res.diverged;
    }
    res.mean_f = stats_of(fe).mean;
    res.mean_g = stats_of(ge).mean;
    return estimate_from(res, [](const SampleStats& st) { return std::abs(st.mean); });
}

McEstimate invariant_measure_error(const ProblemSpec& spec, const IntegratorConfig& config,
                                   double T_long, double h, InvariantMode mode,
                                   const McOptions& options, const Observable& phi,
                                   double reference) {
    IntegratorConfig cfg = config;
    cfg.h = h;
    if (mode == InvariantMode::ensemble) {
        auto res = run_ensemble(spec, cfg, T_long, options,
                                [&](const TrajectorySummary& summary, NoiseStream&) {
                                    if (cfg.method == Method::psk_rock) {
                                        if (!summary.postprocessed)
                                            throw ContractError(
                                                "invariant_measure_error: postprocessor needs "
                                                "additive-scalar noise");
                                        return phi(*summary.postprocessed);
                                    }
                                    return phi(summary.state);
                                });
        return estimate_from(res, [&](const SampleStats& st) {
            return std::abs(st.mean - reference);
        });
    }

    // Time-average mode: one long trajectory, 20% burn-in, batch means.
    const auto total = static_cast<long long>(std::llround(T_long / h));
    if (total < 10) throw InvalidInput("invariant_measure_error: too few steps");
    const long long burnin = total / 5;
    const long long usable = total - burnin;
    const int batches = static_cast<int>(std::min<long long>(100, usable));
    const long long per_batch = usable / batches;
    const long long used = per_batch * batches;
    const bool postprocessed = cfg.method == Method::psk_rock;
    if (postprocessed && spec.problem.diffusion_kind != DiffusionKind::additive_scalar)
        throw ContractError("invariant_measure_error: postprocessor needs additive-scalar noise");

    NoiseStream stream(options.noise, options.seed, 0);
    std::vector<double> batch_sum(batches, 0.0);
    std::vector<double> xbar;
    const double sigma = spec.problem.sigma;
    StepObserver observer = [&](std::int64_t step, std::span<const double> x, int stages) {
        const long long k = step - burnin;
        if (k < 0 || k >= used) return;
        double value;
        if (postprocessed) {
            // In adaptive mode the amplitude follows the stage count of the
            // step that produced this sample.
            const double c = cached_coefficients(stages, cfg.eta)->c;
            xbar = postprocess(x, c, sigma, h, stream);
            value = phi(xbar);
        } else {
            value = phi(x);
        }
        batch_sum[k / per_batch] += value;
    };
    TrajectorySummary summary = integrate(spec.problem, cfg, spec.x0, T_long, stream, observer);

    std::vector<double> batch_means(batches);
    for (int b = 0; b < batches; ++b)
        batch_means[b] = batch_sum[b] / static_cast<double>(per_batch);
    const SampleStats st = stats_of(batch_means);
    McEstimate est;
    est.value = std::abs(st.mean - reference);
    est.raw = st.mean;
    est.std_error = st.sd / std::sqrt(static_cast<double>(batches));
    est.samples = batches;
    est.mean_f_evals = static_cast<double>(summary.f_evals);
    est.mean_g_evals = static_cast<double>(summary.g_evals);
    return est;
}

long long count_divergent(const ProblemSpec& spec, const IntegratorConfig& config, double T,
                          const McOptions& options) {
    auto res = run_ensemble(spec, config, T, options,
                            [](const TrajectorySummary&, NoiseStream&) { return 0.0; });
    return res.diverged;
}

double fit_slope(const ConvergenceTable& table) {
    std::vector<double> lx, ly;
    for (const auto& row : table.rows) {
        if (row.error > 3.0 * row.std_error && row.error > 0.0 && row.h > 0.0) {
            lx.push_back(std::log(row.h));
            ly.push_back(std::log(row.error));
        }
    }
    if (lx.size() < 3)
        throw InsufficientData("fit_slope: only " + std::to_string(lx.size()) +
                               " rows above the noise floor (need 3)");
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    return sxy / sxx;
}

ConvergenceTable convergence_table(const ProblemSpec& spec, const IntegratorConfig& config,
                                   double T, std::span<const double> hs, const McOptions& options,
                                   ErrorKind kind, const Observable& phi,
                                   std::optional<double> reference) {
    ConvergenceTable table;
    for (double h : hs) {
        McEstimate est = kind == ErrorKind::strong
                             ? strong_error(spec, config, T, h, options)
                             : weak_error(spec, config, T, h, options, phi, reference);
        ConvergenceRow row;
        row.h = h;
        row.error = est.value;
        row.std_error = est.std_error;
        row.cost = est.mean_f_evals * static_cast<double>(est.samples);
        table.rows.push_back(row);
    }
    return table;
}

ConvergenceTable invariant_convergence_table(const ProblemSpec& spec,
                                             const IntegratorConfig& config,
                                             std::span<const double> hs, double steps_per_h,
                                             InvariantMode mode, const McOptions& options,
                                             const Observable& phi, double reference) {
    ConvergenceTable table;
    for (double h : hs) {
        const double T_long = steps_per_h * h;
        McEstimate est =
            invariant_measure_error(spec, config, T_long, h, mode, options, phi, reference);
        ConvergenceRow row;
        row.h = h;
        row.error = est.value;
        row.std_error = est.std_error;
        row.cost = mode == InvariantMode::ensemble
                       ? est.mean_f_evals * static_cast<double>(est.samples)
                       : est.mean_f_evals;
        table.rows.push_back(row);
    }
    return table;
}

void write_table_csv(std::ostream& out, const ConvergenceTable& table,
                     const std::string& config_header) {
    if (!config_header.empty()) out << "# " << config_header << "\n";
    out << "h,error,std_error,cost\n";
    char buf[128];
    for (const auto& row : table.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", row.h, row.error,
                      row.std_error, row.cost);
        out << buf;
    }
}

} // namespace skrock
