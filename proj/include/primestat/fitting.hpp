#pragma once

// Weighted least squares for w(1/log N) and alpha(h), Pearson chi-square
// and its upper-tail p-value.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "primestat/error.hpp"
#include "primestat/experiment.hpp"
#include "primestat/models.hpp"

namespace primestat {

// ---------------------------------------------------------------------------
// chi-square machinery

inline double chi2_statistic(std::span<const double> values, std::span<const double> errors,
                             std::span<const double> model)
{
    if (values.size() != errors.size() || values.size() != model.size()) {
        throw InputError("chi2: values, errors and model differ in length");
    }
    double chi2 = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(errors[i] > 0)) throw InputError("chi2: errors must be positive");
        const double z = (values[i] - model[i]) / errors[i];
        chi2 += z * z;
    }
    return chi2;
}

namespace detail {

inline constexpr int kGammaMaxIterations = 10000;

// P(a, x) by its power series; converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x)
{
    double term = 1 / a;
    double sum = term;
    for (int n = 1; n < kGammaMaxIterations; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double f = d;
    for (int i = 1; i < kGammaMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * f;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x).
inline double regularized_gamma_q(double a, double x)
{
    if (!(a > 0) || !(x >= 0)) throw InputError("Q(a, x) needs a > 0 and x >= 0");
    if (x == 0) return 1;
    if (x < a + 1) return 1 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

/// Upper-tail probability of a chi-square variable with `ndof` degrees of freedom.
inline double p_value(double chi2, int ndof)
{
    if (!(chi2 >= 0) || ndof < 1) throw InputError("p-value needs chi2 >= 0 and ndof >= 1");
    return std::clamp(regularized_gamma_q(0.5 * ndof, 0.5 * chi2), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// results

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<double> errors;       // 1 sigma
    std::vector<double> covariance;   // row-major, params.size()^2
    double chi2 = 0;
    int ndof = 0;
    double chi2_reduced = 0;
    double p_value = 1;
    int n_points = 0;

    bool converged = true;
    bool constraint_satisfied = true;
    bool degenerate = false;
    int iterations = 0;
    double gradient_norm = 0;
    std::string diagnostics;

    std::size_t index_of(std::string_view name) const
    {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return i;
        }
        throw InputError("fit has no parameter '" + std::string(name) + "'");
    }
    double param(std::string_view name) const { return params[index_of(name)]; }
    double error(std::string_view name) const { return errors[index_of(name)]; }
    double cov(std::size_t i, std::size_t j) const { return covariance[i * params.size() + j]; }
};

namespace detail {

inline void finish_stats(FitResult& r, int n_params, bool inflate_errors)
{
    r.ndof = r.n_points - n_params;
    if (r.ndof < 1) throw InputError("fit needs more points than parameters");
    r.chi2_reduced = r.chi2 / r.ndof;
    r.p_value = p_value(r.chi2, r.ndof);
    if (inflate_errors) {
        for (double& c : r.covariance) c *= r.chi2_reduced;
    }
    r.errors.resize(r.params.size());
    for (std::size_t i = 0; i < r.params.size(); ++i) r.errors[i] = std::sqrt(r.cov(i, i));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// w = 1 - b x, x = 1 / log N

inline void check_wpoints(std::span<const WPoint> points, std::size_t min_points)
{
    if (points.size() < min_points) {
        throw InputError("fit needs at least " + std::to_string(min_points) + " points");
    }
    for (const auto& p : points) {
        if (!(p.w_err > 0)) throw InputError("fit needs positive w errors");
    }
}

/// Weighted fit of w = 1 - b x with the intercept fixed at 1.
inline FitResult fit_b(std::span<const WPoint> points, bool inflate_errors = false)
{
    check_wpoints(points, 2);
    double sxy = 0;
    double sxx = 0;
    for (const auto& p : points) {
        const double wt = 1 / (p.w_err * p.w_err);
        sxy += p.x * (1 - p.w) * wt;
        sxx += p.x * p.x * wt;
    }
    FitResult r;
    r.names = {"b"};
    r.params = {sxy / sxx};
    r.covariance = {1 / sxx};
    r.n_points = static_cast<int>(points.size());
    for (const auto& p : points) {
        const double z = (p.w - (1 - r.params[0] * p.x)) / p.w_err;
        r.chi2 += z * z;
    }
    detail::finish_stats(r, 1, inflate_errors);
    return r;
}

/// Diagnostic fit of w = a - b x with a free intercept. Not used for b(h, m).
inline FitResult fit_b_free_intercept(std::span<const WPoint> points)
{
    check_wpoints(points, 3);
    double s = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (const auto& p : points) {
        const double wt = 1 / (p.w_err * p.w_err);
        s += wt;
        sx += wt * p.x;
        sxx += wt * p.x * p.x;
        sy += wt * p.w;
        sxy += wt * p.x * p.w;
    }
    const double det = s * sxx - sx * sx;
    if (!(det > 0)) throw NumericalError("free-intercept fit is singular (all N equal?)");
    const double a = (sxx * sy - sx * sxy) / det;
    const double slope = (s * sxy - sx * sy) / det;
    FitResult r;
    r.names = {"a", "b"};
    r.params = {a, -slope};
    // covariance of (a, slope) is [[sxx, -sx], [-sx, s]] / det; b = -slope flips the cross term
    r.covariance = {sxx / det, sx / det, sx / det, s / det};
    r.n_points = static_cast<int>(points.size());
    for (const auto& p : points) {
        const double z = (p.w - (a + slope * p.x)) / p.w_err;
        r.chi2 += z * z;
    }
    detail::finish_stats(r, 2, false);
    return r;
}

// ---------------------------------------------------------------------------
// alpha(h)

struct AlphaPoint {
    std::uint64_t h = 0;
    double alpha = 0;
    double alpha_err = 0;
};

/// alpha = (b - C) / log h, error sigma_b / log h (C exact).
inline AlphaPoint derive_alpha(const FitResult& b_fit, double c, std::uint64_t h)
{
    if (h < 2) throw InputError("alpha needs h >= 2");
    const double l = std::log(static_cast<double>(h));
    return {h, (b_fit.param("b") - c) / l, b_fit.error("b") / l};
}

struct AlphaFitOptions {
    std::uint64_t h_min = 200;
    std::array<double, 2> initial_guess{0.0, 0.0};  // (alpha1, alpha2) for kind III
    int max_iterations = 200;
    double step_tolerance = 1e-12;
    double degenerate_rcond = 1e-9;
    bool inflate_errors = false;
};

struct AlphaFit {
    AlphaKind kind = AlphaKind::I;
    FitResult fit;
    double B = 0;
    double B_err = 0;

    AlphaParametrization parametrization() const
    {
        AlphaParametrization p{kind, 0, 0};
        if (kind != AlphaKind::II) p.alpha1 = fit.param("alpha1");
        if (kind != AlphaKind::I) p.alpha2 = fit.param("alpha2");
        return p;
    }
};

namespace detail {

struct AlphaData {
    std::vector<double> log_h;
    std::vector<double> alpha;
    std::vector<double> weight;  // 1 / sigma^2
};

inline AlphaData select_alpha_points(std::span<const AlphaPoint> points, std::uint64_t h_min, int n_params)
{
    AlphaData d;
    for (const auto& p : points) {
        if (p.h < std::max<std::uint64_t>(h_min, 2)) continue;
        if (!(p.alpha_err > 0)) throw InputError("alpha points need positive errors");
        d.log_h.push_back(std::log(static_cast<double>(p.h)));
        d.alpha.push_back(p.alpha);
        d.weight.push_back(1 / (p.alpha_err * p.alpha_err));
    }
    if (static_cast<int>(d.log_h.size()) < n_params + 1) {
        throw InputError("alpha fit needs at least " + std::to_string(n_params + 1) + " points with h >= " +
                         std::to_string(h_min));
    }
    return d;
}

/// Model value and parameter derivatives of alpha at one log h.
/// Returns false when the parameters sit on a pole.
/// Extended precision keeps the gradient noise floor well below the convergence tolerance.
using Real = long double;

template <std::size_t P>
using ModelEval = bool (*)(const std::array<double, P>&, double, Real&, std::array<Real, P>&);

inline bool model_kind2(const std::array<double, 1>& q, double l, Real& f, std::array<Real, 1>& df)
{
    const Real den = static_cast<Real>(q[0]) + l;
    if (!(den > 0)) return false;
    f = l / den;
    df[0] = -l / (den * den);
    return true;
}

inline bool model_kind3(const std::array<double, 2>& q, double l, Real& f, std::array<Real, 2>& df)
{
    const Real den = static_cast<Real>(q[1]) + l;
    if (!(den > 0)) return false;
    f = (static_cast<Real>(q[0]) + l) / den;
    df[0] = 1 / den;
    df[1] = -f / den;
    return true;
}

template <std::size_t P>
struct NormalEquations {
    std::array<Real, P * P> a{};  // J^T W J
    std::array<Real, P> g{};      // J^T W r
    Real chi2 = 0;
};

template <std::size_t P>
bool assemble(ModelEval<P> model, const AlphaData& d, const std::array<double, P>& q, NormalEquations<P>& ne)
{
    ne = {};
    for (std::size_t i = 0; i < d.log_h.size(); ++i) {
        Real f = 0;
        std::array<Real, P> df{};
        if (!model(q, d.log_h[i], f, df)) return false;
        const Real r = d.alpha[i] - f;
        const Real wt = d.weight[i];
        ne.chi2 += wt * r * r;
        for (std::size_t j = 0; j < P; ++j) {
            ne.g[j] += wt * df[j] * r;
            for (std::size_t k = 0; k < P; ++k) ne.a[j * P + k] += wt * df[j] * df[k];
        }
    }
    return true;
}

template <std::size_t P>
bool solve(std::array<Real, P * P> a, std::array<Real, P> b, std::array<Real, P>& x)
{
    if constexpr (P == 1) {
        if (!(a[0] > 0)) return false;
        x[0] = b[0] / a[0];
        return true;
    } else {
        const Real det = a[0] * a[3] - a[1] * a[2];
        if (!(std::abs(det) > 0) || !std::isfinite(det)) return false;
        x[0] = (a[3] * b[0] - a[1] * b[1]) / det;
        x[1] = (a[0] * b[1] - a[2] * b[0]) / det;
        return true;
    }
}

template <std::size_t P, typename T>
double norm(const std::array<T, P>& v)
{
    Real s = 0;
    for (const T e : v) s += static_cast<Real>(e) * e;
    return static_cast<double>(std::sqrt(s));
}

inline constexpr double kGradientTolerance = 1e-10;

/// Damped Gauss-Newton: diagonal damping, x10 on a chi2 increase, /10 on success.
template <std::size_t P>
FitResult gauss_newton(ModelEval<P> model, const AlphaData& d, std::array<double, P> q, const AlphaFitOptions& opts,
                       std::vector<std::string> names)
{
    NormalEquations<P> ne;
    if (!assemble(model, d, q, ne)) throw FitFailure("initial guess lies on a model pole");
    double lambda = 1e-3;
    bool converged = false;
    int it = 0;
    std::string why = "iteration limit reached";
    for (; it < opts.max_iterations && !converged; ++it) {
        if (norm<P>(ne.g) <= 1e-14 * (1 + ne.chi2)) {
            converged = true;
            break;
        }
        bool accepted = false;
        while (!accepted) {
            auto damped = ne.a;
            for (std::size_t j = 0; j < P; ++j) damped[j * P + j] *= 1 + lambda;
            std::array<Real, P> step{};
            if (!solve<P>(damped, ne.g, step)) {
                lambda *= 10;
            } else {
                std::array<double, P> trial = q;
                for (std::size_t j = 0; j < P; ++j) trial[j] = static_cast<double>(trial[j] + step[j]);
                NormalEquations<P> tne;
                if (assemble(model, d, trial, tne) && tne.chi2 <= ne.chi2) {
                    q = trial;
                    ne = tne;
                    lambda = std::max(lambda / 10, 1e-15);
                    accepted = true;
                    // a small step alone can stall on a flat valley floor; require a flat gradient too
                    if (norm<P>(step) <= opts.step_tolerance * (1 + norm<P>(q)) &&
                        norm<P>(ne.g) <= kGradientTolerance * (1 + ne.chi2)) {
                        converged = true;
                    }
                } else {
                    lambda *= 10;
                }
            }
            if (lambda > 1e20) {
                // No descent direction left: either at the optimum or stuck.
                converged = norm<P>(ne.g) <= kGradientTolerance * (1 + ne.chi2);
                why = "damping diverged with gradient norm " + std::to_string(norm<P>(ne.g));
                break;
            }
        }
        if (lambda > 1e20) break;
    }
    if (!converged) {
        throw FitFailure("Gauss-Newton did not converge after " + std::to_string(it) + " iterations: " + why);
    }

    FitResult r;
    r.names = std::move(names);
    r.params.assign(q.begin(), q.end());
    r.chi2 = static_cast<double>(ne.chi2);
    r.n_points = static_cast<int>(d.log_h.size());
    r.iterations = it;
    r.gradient_norm = norm<P>(ne.g);
    r.converged = true;
    r.covariance.assign(P * P, std::numeric_limits<double>::infinity());
    if constexpr (P == 1) {
        if (ne.a[0] > 0) r.covariance[0] = static_cast<double>(1 / ne.a[0]);
        else r.degenerate = true;
    } else {
        std::array<double, 4> a{};
        for (std::size_t j = 0; j < 4; ++j) a[j] = static_cast<double>(ne.a[j]);
        const double det = a[0] * a[3] - a[1] * a[2];
        const double c = a[1] / std::sqrt(a[0] * a[3]);
        const double rcond = (1 - std::abs(c)) / (1 + std::abs(c));
        if (det > 0 && rcond >= opts.degenerate_rcond) {
            r.covariance = {a[3] / det, -a[1] / det, -a[2] / det, a[0] / det};
        } else {
            r.degenerate = true;
            if (det > 0) r.covariance = {a[3] / det, -a[1] / det, -a[2] / det, a[0] / det};
            r.diagnostics = "near-collinear parameters: reciprocal condition " + std::to_string(rcond);
        }
    }
    return r;
}

}  // namespace detail

/// Fits one alpha(h) parametrization to points with h >= h_min.
/// I is linear in 1/log h and solved in closed form. II is started from its
/// linearization 1/alpha = 1 + a2/log h and refined in alpha space. III uses
/// damped Gauss-Newton on (a1, a2); a1 <= a2 at the optimum is flagged.
inline AlphaFit fit_alpha(AlphaKind kind, std::span<const AlphaPoint> points, const AlphaFitOptions& opts = {})
{
    const detail::AlphaData d = detail::select_alpha_points(points, opts.h_min, parameter_count(kind));
    AlphaFit out;
    out.kind = kind;
    FitResult& r = out.fit;

    switch (kind) {
    case AlphaKind::I: {
        double suy = 0;
        double suu = 0;
        for (std::size_t i = 0; i < d.log_h.size(); ++i) {
            const double u = 1 / d.log_h[i];
            suy += d.weight[i] * u * (d.alpha[i] - 1);
            suu += d.weight[i] * u * u;
        }
        r.names = {"alpha1"};
        r.params = {suy / suu};
        r.covariance = {1 / suu};
        r.n_points = static_cast<int>(d.log_h.size());
        for (std::size_t i = 0; i < d.log_h.size(); ++i) {
            const double res = d.alpha[i] - (1 + r.params[0] / d.log_h[i]);
            r.chi2 += d.weight[i] * res * res;
        }
        break;
    }
    case AlphaKind::II: {
        double suy = 0;
        double suu = 0;
        for (std::size_t i = 0; i < d.log_h.size(); ++i) {
            const double u = 1 / d.log_h[i];
            const double a2 = d.alpha[i] * d.alpha[i];
            const double wt = d.weight[i] * a2 * a2;  // sigma(1/alpha) = sigma / alpha^2
            suy += wt * u * (1 / d.alpha[i] - 1);
            suu += wt * u * u;
        }
        r = detail::gauss_newton<1>(detail::model_kind2, d, {suy / suu}, opts, {"alpha2"});
        break;
    }
    case AlphaKind::III: {
        r = detail::gauss_newton<2>(detail::model_kind3, d, opts.initial_guess, opts, {"alpha1", "alpha2"});
        r.constraint_satisfied = r.params[0] > r.params[1];
        if (!r.constraint_satisfied) {
            if (!r.diagnostics.empty()) r.diagnostics += "; ";
            r.diagnostics += "alpha1 <= alpha2 at the optimum";
        }
        break;
    }
    }
    detail::finish_stats(r, parameter_count(kind), opts.inflate_errors);

    out.B = extract_B(out.parametrization());
    switch (kind) {
    case AlphaKind::I: out.B_err = r.errors[0]; break;
    case AlphaKind::II: out.B_err = r.errors[0]; break;
    case AlphaKind::III:
        out.B_err = std::sqrt(std::max(0.0, r.cov(0, 0) + r.cov(1, 1) - 2 * r.cov(0, 1)));
        break;
    }
    return out;
}

/// Orders fits by p-value, best first (stable for ties).
inline std::vector<AlphaFit> compare_parametrizations(std::vector<AlphaFit> fits)
{
    std::stable_sort(fits.begin(), fits.end(),
                     [](const AlphaFit& a, const AlphaFit& b) { return a.fit.p_value > b.fit.p_value; });
    return fits;
}

}  // namespace primestat
