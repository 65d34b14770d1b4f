#pragma once

#include "error.hpp"
#include "noise_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

namespace gradnoise {

/// Block-sum log-moment estimate of the stability parameter.
///
/// With blocks of k1 consecutive samples summed to Y_1..Y_k2,
///   1/alpha = ( mean_j log|Y_j| - mean_i log|X_i| ) / log k1.
/// This is only a consistent estimator for i.i.d. stable data; on anything
/// else the number it returns has no particular meaning.
struct TailIndexEstimate {
    double alpha_hat = 0.0;  // clamped to (0, 2]
    double raw_alpha = 0.0;  // 1 / inverse_alpha, +inf when inverse_alpha == 0
    double inverse_alpha = 0.0;
    bool out_of_range = false;  // raw estimate was > 2 or non-positive
    bool constant_input = false;  // every sample equal: the estimate is meaningless
    std::size_t k1 = 0;
    std::size_t k2 = 0;
    std::size_t n = 0;
};

/// Default block length: the divisor of n nearest to floor(sqrt(n)),
/// preferring the smaller one on ties. For prime n this is n itself.
inline std::size_t default_block_length(std::size_t n) {
    require(n >= 2, ErrorKind::parameter, "tail-index estimation needs at least 2 samples");
    const auto root = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    std::size_t below = 0;
    for (std::size_t d = std::min(root, n); d >= 2; --d) {
        if (n % d == 0) {
            below = d;
            break;
        }
    }
    std::size_t above = n;
    for (std::size_t d = root; d <= n; ++d) {
        if (n % d == 0) {
            above = d;
            break;
        }
    }
    if (below == 0) return above;
    return (above - root < root - below) ? above : below;
}

inline TailIndexEstimate estimate_alpha(std::span<const double> samples, std::size_t k1) {
    const std::size_t n = samples.size();
    require(k1 >= 2, ErrorKind::parameter, "block length k1 must be >= 2");
    require(n >= k1 && n % k1 == 0, ErrorKind::parameter,
            "block length k1 = " + std::to_string(k1) + " must divide n = " + std::to_string(n));

    double log_x = 0.0;
    for (double x : samples) {
        require(x != 0.0, ErrorKind::degenerate, "tail-index estimation: a sample is exactly zero");
        log_x += std::log(std::abs(x));
    }
    const std::size_t k2 = n / k1;
    double log_y = 0.0;
    for (std::size_t j = 0; j < k2; ++j) {
        double block = 0.0;
        for (std::size_t i = j * k1; i < (j + 1) * k1; ++i) block += samples[i];
        require(block != 0.0, ErrorKind::degenerate, "tail-index estimation: a block sum is exactly zero");
        log_y += std::log(std::abs(block));
    }

    TailIndexEstimate est;
    est.k1 = k1;
    est.k2 = k2;
    est.n = n;
    est.inverse_alpha = (log_y / static_cast<double>(k2) - log_x / static_cast<double>(n)) /
                        std::log(static_cast<double>(k1));
    est.raw_alpha = 1.0 / est.inverse_alpha;
    est.alpha_hat = est.raw_alpha;
    // inverse <= 1/2 means the block sums grow no faster than Gaussian ones
    // (or shrink): the closest stability parameter is 2.
    if (!(est.inverse_alpha > 0.5)) {
        est.out_of_range = est.inverse_alpha < 0.5;
        est.alpha_hat = 2.0;
    }
    est.constant_input = true;
    for (double x : samples) {
        if (x != samples.front()) {
            est.constant_input = false;
            break;
        }
    }
    return est;
}

inline TailIndexEstimate estimate_alpha(std::span<const double> samples) {
    return estimate_alpha(samples, default_block_length(samples.size()));
}

/// Treat all M*p noise entries as one i.i.d. scalar sample (row-major).
/// This reproduces a common but unjustified practice: SGN coordinates are
/// neither independent nor identically distributed in general.
inline TailIndexEstimate estimate_alpha_on_noise(const NoiseMatrix& noise, std::size_t k1) {
    return estimate_alpha(noise.data(), k1);
}

inline TailIndexEstimate estimate_alpha_on_noise(const NoiseMatrix& noise) {
    return estimate_alpha(noise.data());
}

}  // namespace gradnoise
