#pragma once

// Closed-form predictions for primes in short intervals: mesoscopic
// asymptotics, the w models, the alpha(h) parametrizations and the
// finite-size corrected variance.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "primestat/error.hpp"

namespace primestat {

/// h / log N.
inline double asymptotic_mean(double n, double h) { return h / std::log(n); }

/// (h / log^2 N) log(N/h).
inline double asymptotic_variance(double n, double h)
{
    const double l = std::log(n);
    return h / (l * l) * std::log(n / h);
}

/// w = 1 - b / log N.
inline double w_linear(double n, double b) { return 1 - b / std::log(n); }

/// w = 1 - (C + alpha log h) / log N.
inline double w_alpha(double n, double h, double c, double alpha) { return 1 - (c + alpha * std::log(h)) / std::log(n); }

enum class AlphaKind { I, II, III };

inline std::string_view to_string(AlphaKind kind)
{
    switch (kind) {
    case AlphaKind::I: return "I";
    case AlphaKind::II: return "II";
    case AlphaKind::III: return "III";
    }
    return "?";
}

inline AlphaKind parse_alpha_kind(std::string_view s)
{
    if (s == "I") return AlphaKind::I;
    if (s == "II") return AlphaKind::II;
    if (s == "III") return AlphaKind::III;
    throw InputError("unknown alpha parametrization '" + std::string(s) + "' (expected I, II or III)");
}

inline int parameter_count(AlphaKind kind) { return kind == AlphaKind::III ? 2 : 1; }

/// alpha(h) with f(h) = log h:
///   I:   (a1 + log h) / log h
///   II:  log h / (a2 + log h)
///   III: (a1 + log h) / (a2 + log h)
/// Unused parameters are ignored (a2 for I, a1 for II).
struct AlphaParametrization {
    AlphaKind kind = AlphaKind::I;
    double alpha1 = 0;
    double alpha2 = 0;
};

inline double alpha_eval(const AlphaParametrization& p, double h)
{
    if (!(h >= 1)) throw InputError("alpha(h) needs h >= 1");
    const double l = std::log(h);
    switch (p.kind) {
    case AlphaKind::I:
        if (h < 2) throw InputError("alpha_I needs h >= 2");
        return (p.alpha1 + l) / l;
    case AlphaKind::II:
        if (h < 2) throw InputError("alpha_II needs h >= 2");
        if (p.alpha2 + l == 0) throw InputError("alpha_II pole at alpha2 = -log h");
        return l / (p.alpha2 + l);
    case AlphaKind::III:
        if (p.alpha2 + l == 0) throw InputError("alpha_III pole at alpha2 = -log h");
        return (p.alpha1 + l) / (p.alpha2 + l);
    }
    throw InputError("bad alpha kind");
}

/// Large-h constant: alpha(h) = 1 + (B - 1)/log h + O(1/log^2 h).
inline double extract_B(const AlphaParametrization& p)
{
    switch (p.kind) {
    case AlphaKind::I: return 1 + p.alpha1;
    case AlphaKind::II: return 1 - p.alpha2;
    case AlphaKind::III: return 1 + p.alpha1 - p.alpha2;
    }
    throw InputError("bad alpha kind");
}

/// Sign of B in the corrected variance. `minus` matches measured data
/// (variance below the asymptotic value); `plus` is the printed form.
enum class SignConvention { minus, plus };

inline double sign_of(SignConvention s) { return s == SignConvention::minus ? -1.0 : 1.0; }

/// (h / log^2 N) (log(N/h) -+ B).
inline double corrected_variance(double n, double h, double b, SignConvention sign = SignConvention::minus)
{
    const double l = std::log(n);
    return h / (l * l) * (std::log(n / h) + sign_of(sign) * b);
}

/// 1 - (log h +- B) / log N, i.e. corrected_variance / asymptotic_mean.
inline double corrected_w(double n, double h, double b, SignConvention sign = SignConvention::minus)
{
    return 1 - (std::log(h) - sign_of(sign) * b) / std::log(n);
}

/// gamma + log(2 pi) - 1.
inline double ms_constant() { return std::numbers::egamma + std::log(2 * std::numbers::pi) - 1; }

/// lambda^k e^-lambda / k!, evaluated in log space.
inline double poisson_pmf(double lambda, unsigned k)
{
    if (!(lambda >= 0)) throw InputError("Poisson rate must be non-negative");
    if (lambda == 0) return k == 0 ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    return std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1));
}

enum class Scale { microscopic, mesoscopic, macroscopic };

inline std::string_view to_string(Scale s)
{
    switch (s) {
    case Scale::microscopic: return "microscopic";
    case Scale::mesoscopic: return "mesoscopic";
    case Scale::macroscopic: return "macroscopic";
    }
    return "?";
}

struct ScaleThresholds {
    double mesoscopic_ratio = 10;   // h / log N at or above this is mesoscopic
    double macroscopic_ratio = 1;   // h / N at or above this is macroscopic
};

struct ScaleClass {
    Scale scale = Scale::microscopic;
    double ratio = 0;  // h / log N
};

inline ScaleClass classify_scale(double n, double h, const ScaleThresholds& t = {})
{
    if (!(n > 1) || !(h > 0)) throw InputError("scale classification needs N > 1 and h > 0");
    const double ratio = h / std::log(n);
    if (h / n >= t.macroscopic_ratio) return {Scale::macroscopic, ratio};
    if (ratio >= t.mesoscopic_ratio) return {Scale::mesoscopic, ratio};
    return {Scale::microscopic, ratio};
}

}  // namespace primestat
