#pragma once

#include "error.hpp"
#include "rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace gradnoise {

/// Parameters of the symmetric, centered, unit-scale stable law
/// S(alpha, 0, 1, 0) in the 1-parameterization. Only alpha is free.
///
/// Note the scale convention: S(2, 0, 1, 0) is N(0, 2), not N(0, 1).
struct StableParams {
    double alpha = 2.0;
    static constexpr double beta = 0.0;
    static constexpr double gamma = 1.0;
    static constexpr double delta = 0.0;

    StableParams() = default;
    explicit StableParams(double stability) : alpha(stability) { validate(); }

    void validate() const {
        require(alpha > 0.0 && alpha <= 2.0, ErrorKind::parameter,
                "stability parameter alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
};

/// One S(alpha, 0, 1, 0) draw by the Chambers-Mallows-Stuck transform.
/// alpha == 1 takes the Cauchy branch tan(V).
inline double sas_draw(double alpha, Rng& rng) {
    constexpr double half_pi = 0.5 * std::numbers::pi;
    const double v = rng.uniform(-half_pi, half_pi);
    if (alpha == 1.0) return std::tan(v);
    const double w = rng.exponential();
    const double head = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
    return head * std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

/// n i.i.d. S(alpha, 0, 1, 0) draws. Bit-identical for identical
/// (params, n, seed, stream).
inline std::vector<double> sample_sas(const StableParams& params, std::size_t n,
                                      std::uint64_t seed, std::uint64_t stream = 0) {
    params.validate();
    require(n >= 1, ErrorKind::parameter, "sample_sas needs n >= 1");
    Rng rng(derive_seed(seed, streams::stable, stream));
    std::vector<double> out(n);
    for (auto& x : out) x = sas_draw(params.alpha, rng);
    return out;
}

/// c such that a*X1 + b*X2 has the law of c*X for X ~ S(alpha, 0, 1, 0).
inline double stability_scale(double a, double b, double alpha) {
    require(a > 0.0 && b > 0.0, ErrorKind::parameter, "stability_scale needs a, b > 0");
    (void)StableParams{alpha};
    return std::pow(std::pow(a, alpha) + std::pow(b, alpha), 1.0 / alpha);
}

}  // namespace gradnoise
