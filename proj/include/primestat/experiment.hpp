#pragma once

// Moments of per-subinterval prime counts and their error models.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "primestat/error.hpp"
#include "primestat/parallel.hpp"
#include "primestat/sieve.hpp"

namespace primestat {

enum class VarianceDivisor { sample, population };

/// Statistics of one CountVector.
struct MomentSummary {
    double mean = 0;         // <p>
    double mean_square = 0;  // <p^2>
    double variance = 0;     // sigma_p^2 with the configured divisor
    double w = 0;            // variance / mean
    double stat_rel_err = 0;
    double sys_rel_err = 0;
    double sys_abs_err_mean = 0;
    double sys_abs_err_variance = 0;
    double w_err = 0;
};

/// One point of w against x = 1/log N.
struct WPoint {
    std::uint64_t N = 0;
    double x = 0;
    double w = 0;
    double w_err = 0;
};

namespace detail {

inline void require_log_domain(const IntervalSpec& spec)
{
    const double n = static_cast<double>(spec.N);
    const double half = static_cast<double>(spec.delta_n()) / 2;
    if (spec.h < 1 || !(n - half > std::exp(1.0))) {
        throw InputError("error model needs h >= 1 and N - m*h/2 > e");
    }
}

}  // namespace detail

/// Width of the asymptotic mean h/log n across [N - dN/2, N + dN/2].
inline double systematic_error_mean_exact(const IntervalSpec& spec)
{
    detail::require_log_domain(spec);
    const double n = static_cast<double>(spec.N);
    const double h = static_cast<double>(spec.h);
    const double dn = static_cast<double>(spec.delta_n());
    return 2 * h * std::atanh(dn / (2 * n)) / (std::log(n - dn / 2) * std::log(n + dn / 2));
}

/// First-order expansion m*h^2 / (N log^2 N).
inline double systematic_error_mean_first_order(const IntervalSpec& spec)
{
    const double n = static_cast<double>(spec.N);
    const double h = static_cast<double>(spec.h);
    const double log_n = std::log(n);
    return static_cast<double>(spec.m) * h * h / (n * log_n * log_n);
}

/// m*h / (N log N).
inline double relative_systematic_error(const IntervalSpec& spec)
{
    const double n = static_cast<double>(spec.N);
    return static_cast<double>(spec.m) * static_cast<double>(spec.h) / (n * std::log(n));
}

/// First-order change of the asymptotic variance across the window:
/// h*dN*(2 log(N/h) - log N) / (N log^3 N).
inline double systematic_error_variance(const IntervalSpec& spec)
{
    const double n = static_cast<double>(spec.N);
    const double h = static_cast<double>(spec.h);
    const double dn = static_cast<double>(spec.delta_n());
    const double log_n = std::log(n);
    return h * dn * (2 * std::log(n / h) - log_n) / (log_n * log_n * log_n * n);
}

/// Two-term difference of h log(n/h)/log^2 n between the window ends.
inline double systematic_error_variance_exact(const IntervalSpec& spec)
{
    detail::require_log_domain(spec);
    const double n = static_cast<double>(spec.N);
    const double h = static_cast<double>(spec.h);
    const double dn = static_cast<double>(spec.delta_n());
    auto asym = [h](double x) {
        const double l = std::log(x);
        return h * std::log(x / h) / (l * l);
    };
    return asym(n - dn / 2) - asym(n + dn / 2);
}

/// sqrt(log(N/h) / h).
inline double relative_statistical_error(const IntervalSpec& spec)
{
    const double n = static_cast<double>(spec.N);
    const double h = static_cast<double>(spec.h);
    return std::sqrt(std::log(n / h) / h);
}

/// Delta-method standard error of w, treating the sample mean and sample
/// variance as independent (exact for normal data).
inline double w_standard_error(const MomentSummary& s, const IntervalSpec& spec)
{
    if (!(s.mean > 0)) throw UndefinedStatistic("w_err undefined: mean count is zero");
    if (spec.m < 2) throw InputError("w_err needs m >= 2");
    const double m = static_cast<double>(spec.m);
    return s.w * std::sqrt(2 / (m - 1) + s.variance / (m * s.mean * s.mean));
}

inline MomentSummary moments(const CountVector& c, VarianceDivisor divisor = VarianceDivisor::sample)
{
    const std::size_t m = c.counts.size();
    if (m < 2) throw InputError("moments need at least two subintervals");
    if (m != c.spec.m) throw InputError("count vector length differs from spec.m");

    // Integer sums keep the statistics exact and order independent.
    unsigned __int128 s1 = 0;
    unsigned __int128 s2 = 0;
    for (const std::uint32_t p : c.counts) {
        s1 += p;
        s2 += static_cast<unsigned __int128>(p) * p;
    }
    if (s1 == 0) throw UndefinedStatistic("w undefined: no primes in any subinterval");

    const auto md = static_cast<double>(m);
    const auto s1d = static_cast<double>(s1);
    const auto s2d = static_cast<double>(s2);
    const unsigned __int128 centered = static_cast<unsigned __int128>(m) * s2 - s1 * s1;  // m^2 * pop. variance
    const double dof = divisor == VarianceDivisor::sample ? md - 1 : md;

    MomentSummary out;
    out.mean = s1d / md;
    out.mean_square = s2d / md;
    out.variance = static_cast<double>(centered) / (md * dof);
    // <p^2>/<p> - <p> collapses to exactly 1 - <p> when every count is 0 or 1.
    const double scale = divisor == VarianceDivisor::sample ? md / (md - 1) : 1.0;
    out.w = (s2d / s1d - out.mean) * scale;

    out.stat_rel_err = relative_statistical_error(c.spec);
    out.sys_rel_err = relative_systematic_error(c.spec);
    out.sys_abs_err_mean = systematic_error_mean_first_order(c.spec);
    out.sys_abs_err_variance = std::abs(systematic_error_variance(c.spec));
    out.w_err = w_standard_error(out, c.spec);
    return out;
}

/// Bootstrap standard error of w (resampling subintervals with replacement).
/// Cross-validation only; fits use w_standard_error.
inline double w_bootstrap_error(const CountVector& c, std::size_t resamples = 1000, std::uint64_t seed = 20240521,
                                VarianceDivisor divisor = VarianceDivisor::sample)
{
    const std::size_t m = c.counts.size();
    if (m < 2 || resamples < 2) throw InputError("bootstrap needs m >= 2 and at least two resamples");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    const double md = static_cast<double>(m);
    const double dof = divisor == VarianceDivisor::sample ? md - 1 : md;
    double sum = 0;
    double sum_sq = 0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < resamples; ++r) {
        double s1 = 0;
        double s2 = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double p = c.counts[pick(rng)];
            s1 += p;
            s2 += p * p;
        }
        if (s1 == 0) continue;
        const double mean = s1 / md;
        const double var = (s2 - s1 * mean) / dof;
        const double w = var / mean;
        sum += w;
        sum_sq += w * w;
        ++used;
    }
    if (used < 2) throw UndefinedStatistic("bootstrap w undefined: resamples had zero mean");
    const double n = static_cast<double>(used);
    const double mean_w = sum / n;
    return std::sqrt(std::max(0.0, (sum_sq - n * mean_w * mean_w) / (n - 1)));
}

struct PointResult {
    MomentSummary summary;
    WPoint point;
};

struct ExperimentOptions {
    VarianceDivisor divisor = VarianceDivisor::sample;
    SieveOptions sieve;
};

inline PointResult measure(const CountVector& counts, VarianceDivisor divisor = VarianceDivisor::sample)
{
    PointResult r;
    r.summary = moments(counts, divisor);
    const std::uint64_t n = counts.spec.N;
    if (n < 3) throw InputError("WPoint needs N >= 3");
    r.point = {n, 1 / std::log(static_cast<double>(n)), r.summary.w, r.summary.w_err};
    return r;
}

inline PointResult run_point(const IntervalSpec& spec, const ExperimentOptions& opts = {})
{
    return measure(subinterval_counts(spec, opts.sieve), opts.divisor);
}

/// One sweep entry; `result` is empty when w was undefined at this N.
struct SweepEntry {
    std::uint64_t N = 0;
    std::optional<PointResult> result;
    std::string excluded_reason;
};

/// Measures w at each N for fixed (h, m). Order follows `n_list`.
/// `counts_for` supplies the raw counts (sieve or cache); the default sieves.
template <typename CountSource>
std::vector<SweepEntry> sweep(std::uint64_t h, std::uint64_t m, const std::vector<std::uint64_t>& n_list,
                              const ExperimentOptions& opts, CountSource&& counts_for)
{
    for (const std::uint64_t n : n_list) IntervalSpec{n, h, m}.validate();
    std::vector<SweepEntry> out(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        out[i].N = n_list[i];
        const CountVector counts = counts_for(IntervalSpec{n_list[i], h, m});
        try {
            out[i].result = measure(counts, opts.divisor);
        } catch (const UndefinedStatistic& e) {
            out[i].excluded_reason = e.what();
        }
    }
    return out;
}

inline std::vector<SweepEntry> sweep(std::uint64_t h, std::uint64_t m, const std::vector<std::uint64_t>& n_list,
                                     const ExperimentOptions& opts = {})
{
    return sweep(h, m, n_list, opts, [&](const IntervalSpec& spec) { return subinterval_counts(spec, opts.sieve); });
}

/// The WPoints of a sweep, skipping excluded entries.
inline std::vector<WPoint> fit_points(const std::vector<SweepEntry>& entries)
{
    std::vector<WPoint> pts;
    for (const auto& e : entries) {
        if (e.result) pts.push_back(e.result->point);
    }
    return pts;
}

}  // namespace primestat
