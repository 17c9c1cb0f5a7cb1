#pragma once

namespace primestat {

inline constexpr const char* kCodeVersion = "primestat-1.0.0";

/// Bumped whenever the subinterval layout changes (half-open [x, x+h),
/// window start N - floor(m*h/2)). Cached counts with another value are misses.
inline constexpr unsigned kConventionVersion = 1;

}  // namespace primestat
