#pragma once

#include "error.hpp"
#include "noise_matrix.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stable.hpp"
#include "univariate_tests.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gradnoise {

/// k unit vectors in R^p, row-major.
class DirectionSet {
public:
    DirectionSet() = default;
    DirectionSet(std::size_t count, std::size_t dim, std::vector<double> data, std::uint64_t seed = 0)
        : count_(count), dim_(dim), data_(std::move(data)), seed_(seed) {
        require(data_.size() == count_ * dim_, ErrorKind::shape, "DirectionSet data size does not equal k * p");
    }

    std::size_t count() const noexcept { return count_; }
    std::size_t dim() const noexcept { return dim_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row(std::size_t j) const noexcept { return {data_.data() + j * dim_, dim_}; }

    friend bool operator==(const DirectionSet&, const DirectionSet&) = default;

private:
    std::size_t count_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::uint64_t seed_ = 0;
};

/// k directions drawn uniformly from the unit sphere by normalizing i.i.d.
/// standard normal coordinates. Direction j uses its own stream.
inline DirectionSet random_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
    require(dim >= 1 && count >= 1, ErrorKind::parameter, "random_directions needs p >= 1 and k >= 1");
    std::vector<double> data(dim * count);
    for (std::size_t j = 0; j < count; ++j) {
        Rng rng(derive_seed(seed, streams::directions, j));
        std::span<double> v(data.data() + j * dim, dim);
        double norm2 = 0.0;
        while (norm2 == 0.0) {
            norm2 = 0.0;
            for (auto& x : v) {
                x = rng.normal();
                norm2 += x * x;
            }
        }
        const double norm = std::sqrt(norm2);
        for (auto& x : v) x /= norm;
    }
    return DirectionSet(count, dim, std::move(data), seed);
}

/// k scalar samples of length M; sample j holds <noise row i, direction j>.
class ProjectedSamples {
public:
    ProjectedSamples(std::size_t count, std::size_t length)
        : count_(count), length_(length), data_(count * length, 0.0) {}

    std::size_t count() const noexcept { return count_; }
    std::size_t length() const noexcept { return length_; }
    std::span<const double> sample(std::size_t j) const noexcept { return {data_.data() + j * length_, length_}; }
    std::span<double> sample(std::size_t j) noexcept { return {data_.data() + j * length_, length_}; }

private:
    std::size_t count_;
    std::size_t length_;
    std::vector<double> data_;
};

namespace detail {

inline constexpr std::size_t direction_block = 32;
inline constexpr std::size_t row_block = 128;

}  // namespace detail

/// Project every noise row onto every direction. Each dot product is summed
/// over coordinates in ascending order, so the result is bit-identical for
/// any thread count and any blocking.
inline ProjectedSamples project(const NoiseMatrix& noise, const DirectionSet& dirs, unsigned threads = 1) {
    require(noise.cols() == dirs.dim(), ErrorKind::shape,
            "projection dimension mismatch: noise has p = " + std::to_string(noise.cols()) +
                ", directions have p = " + std::to_string(dirs.dim()));
    using detail::direction_block;
    using detail::row_block;
    const std::size_t m = noise.rows();
    const std::size_t p = noise.cols();
    const std::size_t k = dirs.count();

    // Coordinate-major copy so the inner loop runs over contiguous rows.
    std::vector<double> transposed(p * m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = noise.row(i);
        for (std::size_t c = 0; c < p; ++c) transposed[c * m + i] = row[c];
    }

    ProjectedSamples out(k, m);
    const std::size_t blocks = (k + direction_block - 1) / direction_block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t j0 = b * direction_block;
        const std::size_t nj = std::min(direction_block, k - j0);
        for (std::size_t i0 = 0; i0 < m; i0 += row_block) {
            const std::size_t ni = std::min(row_block, m - i0);
            double acc[direction_block][row_block] = {};
            for (std::size_t c = 0; c < p; ++c) {
                const double* column = transposed.data() + c * m + i0;
                for (std::size_t s = 0; s < nj; ++s) {
                    const double u = dirs.row(j0 + s)[c];
                    double* a = acc[s];
                    for (std::size_t r = 0; r < ni; ++r) a[r] += u * column[r];
                }
            }
            for (std::size_t s = 0; s < nj; ++s) {
                auto sample = out.sample(j0 + s);
                std::copy(acc[s], acc[s] + ni, sample.begin() + static_cast<std::ptrdiff_t>(i0));
            }
        }
    });
    return out;
}

/// Aggregate of the per-direction tests over one set of projected samples.
struct DirectionAggregate {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t directions = 0;
    std::size_t tested = 0;
    std::size_t degenerate = 0;
    double sw_mean_p = 0.0;
    double ad_accept_frac = 0.0;
    double min_sw_p = 1.0;
    double level = default_level;
};

/// Run Shapiro-Wilk and Anderson-Darling on each projected sample. Constant
/// samples are excluded and counted. Results are summed in direction order.
inline DirectionAggregate test_directions(const ProjectedSamples& samples, double level, unsigned threads = 1) {
    (void)anderson_darling_critical_value(level);
    const std::size_t m = samples.length();
    require(m >= anderson_darling_min_size, ErrorKind::size, "battery needs at least 8 noise vectors");
    const ShapiroWilk sw(m);

    struct Outcome {
        bool degenerate = false;
        bool ad_accepted = false;
        double sw_p = 0.0;
    };
    std::vector<Outcome> outcomes(samples.count());
    parallel_for(samples.count(), threads, [&](std::size_t j) {
        std::vector<double> sorted(samples.sample(j).begin(), samples.sample(j).end());
        std::sort(sorted.begin(), sorted.end());
        if (detail::is_constant_sorted(sorted)) {
            outcomes[j].degenerate = true;
            return;
        }
        outcomes[j].sw_p = *sw.test_sorted(sorted, level).p_value;
        outcomes[j].ad_accepted = detail::anderson_darling_sorted(sorted, level).accepted;
    });

    DirectionAggregate agg;
    agg.rows = m;
    agg.directions = samples.count();
    agg.level = level;
    double p_sum = 0.0;
    std::size_t accepted = 0;
    for (const auto& o : outcomes) {
        if (o.degenerate) {
            ++agg.degenerate;
            continue;
        }
        ++agg.tested;
        p_sum += o.sw_p;
        agg.min_sw_p = std::min(agg.min_sw_p, o.sw_p);
        if (o.ad_accepted) ++accepted;
    }
    require(agg.tested > 0, ErrorKind::empty_battery,
            "every projected direction is degenerate (constant); nothing to test");
    agg.sw_mean_p = p_sum / static_cast<double>(agg.tested);
    agg.ad_accept_frac = static_cast<double>(accepted) / static_cast<double>(agg.tested);
    return agg;
}

/// Project and test.
inline DirectionAggregate test_noise(const NoiseMatrix& noise, const DirectionSet& dirs, double level,
                                     unsigned threads = 1) {
    auto agg = test_directions(project(noise, dirs, threads), level, threads);
    agg.cols = noise.cols();
    return agg;
}

/// M x p matrix of i.i.d. standard normal entries; row i has its own stream.
inline NoiseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::vector<double> data(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        Rng rng(derive_seed(seed, streams::baseline, i));
        for (std::size_t c = 0; c < cols; ++c) data[i * cols + c] = rng.normal();
    }
    return NoiseMatrix(rows, cols, std::move(data), NoiseMeta{-1, 0, seed});
}

/// The tests' behaviour on genuinely Gaussian data of the same shape,
/// projected along the same directions. Depends only on (M, p, dirs, seed).
inline DirectionAggregate gaussian_baseline(std::size_t rows, std::size_t cols, const DirectionSet& dirs,
                                            double level, std::uint64_t baseline_seed, unsigned threads = 1) {
    return test_noise(gaussian_matrix(rows, cols, baseline_seed), dirs, level, threads);
}

/// Per-checkpoint summary of the projection battery.
struct ProjectionReport {
    std::int64_t iteration = -1;
    double sw_mean_p = 0.0;
    double ad_accept_frac = 0.0;
    double baseline_sw_mean_p = 0.0;
    double baseline_ad_accept_frac = 0.0;
    double level = default_level;
    std::size_t directions = 0;
    std::size_t n_degenerate = 0;
    double min_sw_p = 1.0;
    /// Some direction rejected Gaussianity with p below gaussian_reject_p,
    /// so the noise cannot be multivariate Gaussian.
    bool gaussian_rejected = false;

    friend bool operator==(const ProjectionReport&, const ProjectionReport&) = default;
};

inline constexpr double gaussian_reject_p = 1e-6;

inline ProjectionReport battery(const NoiseMatrix& noise, const DirectionSet& dirs, double level,
                                const DirectionAggregate& baseline, unsigned threads = 1) {
    require(baseline.rows == noise.rows() && baseline.cols == noise.cols(), ErrorKind::shape,
            "baseline shape does not match the noise matrix");
    require(baseline.directions == dirs.count() && baseline.level == level, ErrorKind::parameter,
            "baseline was computed with different directions or level");
    const auto agg = test_noise(noise, dirs, level, threads);
    ProjectionReport report;
    report.iteration = noise.meta().iteration;
    report.sw_mean_p = agg.sw_mean_p;
    report.ad_accept_frac = agg.ad_accept_frac;
    report.baseline_sw_mean_p = baseline.sw_mean_p;
    report.baseline_ad_accept_frac = baseline.ad_accept_frac;
    report.level = level;
    report.directions = agg.directions;
    report.n_degenerate = agg.degenerate;
    report.min_sw_p = agg.min_sw_p;
    report.gaussian_rejected = agg.min_sw_p < gaussian_reject_p;
    return report;
}

/// Project the noise along every direction, test each projected sample and
/// compare against the Gaussian baseline generated from baseline_seed.
inline ProjectionReport battery(const NoiseMatrix& noise, const DirectionSet& dirs, double level,
                                std::uint64_t baseline_seed, unsigned threads = 1) {
    require(noise.cols() == dirs.dim(), ErrorKind::shape, "projection dimension mismatch");
    (void)ShapiroWilk(noise.rows());
    const auto baseline = gaussian_baseline(noise.rows(), noise.cols(), dirs, level, baseline_seed, threads);
    return battery(noise, dirs, level, baseline, threads);
}

/// M x p matrix with i.i.d. S(alpha, 0, 1, 0) entries.
inline NoiseMatrix sas_matrix(double alpha, std::size_t rows, std::size_t cols, std::uint64_t seed) {
    const StableParams params(alpha);
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto row = sample_sas(params, cols, seed, i);
        data.insert(data.end(), row.begin(), row.end());
    }
    return NoiseMatrix(rows, cols, std::move(data), NoiseMeta{-1, 0, seed});
}

struct SweepConfig {
    std::size_t rows = 1000;
    std::size_t dim = 100;
    std::size_t directions = 1000;
    double level = default_level;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

struct SweepPoint {
    double alpha = 0.0;
    ProjectionReport report;
};

/// For each alpha (ascending), test a matrix of i.i.d. SaS entries against
/// one shared direction set and Gaussian baseline. The matrix for a given
/// alpha does not depend on the other entries of the list.
inline std::vector<SweepPoint> sas_sanity_sweep(std::vector<double> alphas, const SweepConfig& cfg) {
    for (double a : alphas) StableParams{a}.validate();
    std::sort(alphas.begin(), alphas.end());
    std::vector<SweepPoint> out;
    if (alphas.empty()) return out;
    const auto dirs = random_directions(cfg.dim, cfg.directions, derive_seed(cfg.seed, streams::directions));
    const auto baseline =
        gaussian_baseline(cfg.rows, cfg.dim, dirs, cfg.level, derive_seed(cfg.seed, streams::baseline), cfg.threads);
    out.reserve(alphas.size());
    for (double a : alphas) {
        const auto noise = sas_matrix(a, cfg.rows, cfg.dim, derive_seed(cfg.seed, std::bit_cast<std::uint64_t>(a)));
        out.push_back({a, battery(noise, dirs, cfg.level, baseline, cfg.threads)});
    }
    return out;
}

}  // namespace gradnoise
