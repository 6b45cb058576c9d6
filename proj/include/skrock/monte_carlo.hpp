#pragma once

#include "skrock/problems.hpp"
#include "skrock/steppers.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skrock {

/// Scalar observable of the state.
using Observable = std::function<double(std::span<const double> x)>;

struct McOptions {
    long long samples = 10000;
    std::uint64_t seed = 12345;
    int threads = 1;
    NoiseKind noise = NoiseKind::gaussian;
};

struct McEstimate {
    double value = 0.0;      ///< the reported statistic (an error where applicable)
    double raw = 0.0;        ///< underlying estimator before comparison to a reference
    double std_error = 0.0;  ///< sample standard deviation / sqrt(samples)
    long long samples = 0;
    double mean_f_evals = 0.0;  ///< per trajectory
    double mean_g_evals = 0.0;
    long long diverged = 0;  ///< trajectories aborted on non-finite state
};

/// E || X(T) - X_N || with the exact solution evaluated on the same Brownian
/// path (W(T) = sum of step increments). Requires problem.exact and
/// Gaussian increments.
McEstimate strong_error(const ProblemSpec& spec, const IntegratorConfig& config, double T,
                        double h, const McOptions& options);

/// | E phi(X_N) - E phi(X(T)) |. With an exact pathwise solution the
/// estimator is the mean of phi(X_N) - phi(X_exact) over common paths;
/// otherwise `reference` must hold the analytic E phi(X(T)), or (if absent)
/// a same-method control run at h/64 with common random numbers is used.
McEstimate weak_error(const ProblemSpec& spec, const IntegratorConfig& config, double T, double h,
                      const McOptions& options, const Observable& phi,
                      std::optional<double> reference = {});

enum class InvariantMode { ensemble, time_average };

/// | estimate of lim E phi - reference |. Ensemble mode averages phi over
/// trajectories at T_long; time-average mode runs one trajectory of
/// round(T_long/h) steps, discards a 20% burn-in and reports batch-mean
/// statistics (samples = number of batches). For psk_rock the postprocessed
/// state is sampled; the postprocessor is never fed back.
McEstimate invariant_measure_error(const ProblemSpec& spec, const IntegratorConfig& config,
                                   double T_long, double h, InvariantMode mode,
                                   const McOptions& options, const Observable& phi,
                                   double reference);

/// Number of trajectories (out of options.samples) that hit a non-finite
/// state before time T.
long long count_divergent(const ProblemSpec& spec, const IntegratorConfig& config, double T,
                          const McOptions& options);

struct ConvergenceRow {
    double h = 0.0;
    double error = 0.0;
    double std_error = 0.0;
    double cost = 0.0;  ///< total drift evaluations across the run
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
};

/// Least-squares slope of log(error) vs log(h) over rows with
/// error > 3 * std_error. Throws InsufficientData with fewer than 3 rows.
double fit_slope(const ConvergenceTable& table);

enum class ErrorKind { strong, weak };

ConvergenceTable convergence_table(const ProblemSpec& spec, const IntegratorConfig& config,
                                   double T, std::span<const double> hs, const McOptions& options,
                                   ErrorKind kind, const Observable& phi = {},
                                   std::optional<double> reference = {});

ConvergenceTable invariant_convergence_table(const ProblemSpec& spec,
                                             const IntegratorConfig& config,
                                             std::span<const double> hs, double steps_per_h,
                                             InvariantMode mode, const McOptions& options,
                                             const Observable& phi, double reference);

/// CSV with a configuration header comment and 17-significant-digit rows.
void write_table_csv(std::ostream& out, const ConvergenceTable& table,
                     const std::string& config_header);

/// Deterministic pairwise summation (fixed reduction order).
double pairwise_sum(std::span<const double> values);

} // namespace skrock
