#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace gradnoise::normal {

inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail 1 - cdf(z), accurate far into the tail.
inline double sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// log(1 - cdf(z)). erfc underflows near z = 38; past that the asymptotic
/// Mills-ratio series is exact to double precision.
inline double log_sf(double z) {
    if (z < 30.0) return std::log(sf(z));
    const double inv_z2 = 1.0 / (z * z);
    const double series = 1.0 - inv_z2 * (1.0 - 3.0 * inv_z2 * (1.0 - 5.0 * inv_z2));
    return -0.5 * z * z - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

inline double log_cdf(double z) { return log_sf(-z); }

/// Inverse of cdf on (0, 1).
inline double quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace gradnoise::normal
