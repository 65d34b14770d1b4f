#pragma once

#include "dataset.hpp"
#include "error.hpp"
#include "mlp.hpp"
#include "noise_matrix.hpp"
#include "parallel.hpp"
#include "projection.hpp"
#include "rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace gradnoise {

struct TrainConfig {
    std::vector<std::size_t> hidden{128, 128};
    Activation activation = Activation::relu;
    std::size_t batch_size = 256;
    double learning_rate = 0.1;
    std::size_t iterations = 500;
    std::size_t checkpoint_every = 100;
    std::size_t sgn_minibatches = 1000;
    std::uint64_t seed = 42;
    /// Probe with the whole dataset instead of sampled minibatches, which
    /// makes every noise vector exactly zero. Only useful as a diagnostic.
    bool full_batch_probe = false;

    void validate(const Dataset& data) const {
        require(batch_size >= 1 && batch_size <= data.n, ErrorKind::parameter,
                "batch size must satisfy 1 <= b <= n (n = " + std::to_string(data.n) + ")");
        require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::parameter,
                "learning rate must be > 0");
        require(checkpoint_every >= 1, ErrorKind::parameter, "checkpoint_every must be >= 1");
        require(sgn_minibatches >= NoiseMatrix::min_rows && sgn_minibatches <= ShapiroWilk::max_size,
                ErrorKind::parameter, "sgn_minibatches must lie in [8, 5000]");
    }

    std::vector<std::size_t> layer_sizes(const Dataset& data) const {
        std::vector<std::size_t> sizes{data.d};
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        sizes.push_back(data.classes);
        return sizes;
    }
};

struct ProbeConfig {
    std::size_t directions = 1000;
    double level = default_level;
    unsigned threads = 1;
};

/// b indices drawn uniformly with replacement.
inline std::vector<std::size_t> sample_batch(std::size_t n, std::size_t b, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> index(b);
    for (auto& i : index) i = static_cast<std::size_t>(rng.below(n));
    return index;
}

inline std::vector<std::size_t> full_index(std::size_t n) {
    std::vector<std::size_t> index(n);
    std::iota(index.begin(), index.end(), std::size_t{0});
    return index;
}

/// M stochastic-gradient-noise vectors at the current parameters: row j is
/// grad f(w; B_j) - grad f(w; [n]) with B_j of b indices drawn uniformly with
/// replacement from its own stream of `seed`.
inline NoiseMatrix extract_sgn(const ModelState& model, const Dataset& data, std::size_t batch_size,
                               std::size_t count, std::uint64_t seed, unsigned threads = 1,
                               bool full_batch_probe = false) {
    require(batch_size >= 1 && batch_size <= data.n, ErrorKind::parameter, "SGN batch size must satisfy 1 <= b <= n");
    require(count >= NoiseMatrix::min_rows, ErrorKind::parameter, "SGN extraction needs M >= 8");
    const auto all = full_index(data.n);
    const auto full = loss_and_grad(model, data, all).grad;
    const std::size_t p = full.size();
    std::vector<double> rows(count * p);
    parallel_for(count, threads, [&](std::size_t j) {
        const auto index = full_batch_probe ? all : sample_batch(data.n, batch_size, derive_seed(seed, j));
        const auto g = loss_and_grad(model, data, index).grad;
        double* row = rows.data() + j * p;
        for (std::size_t k = 0; k < p; ++k) row[k] = g[k] - full[k];
    });
    return NoiseMatrix(count, p, std::move(rows), NoiseMeta{-1, batch_size, seed});
}

struct Checkpoint {
    std::int64_t iteration = 0;
    ModelState model;
    double loss = 0.0;
    double accuracy = 0.0;
    std::optional<double> test_loss;
    std::optional<double> test_accuracy;
    std::string noise_path;  // set by a checkpoint hook that persists the noise
};

struct ProbeResult {
    Checkpoint checkpoint;
    ProjectionReport report;
};

/// Called with each checkpoint and its noise matrix before the battery runs.
using CheckpointHook = std::function<void(Checkpoint&, const NoiseMatrix&)>;

/// Run constant-learning-rate minibatch SGD for `iterations` steps. At every
/// multiple of checkpoint_every (including 0) record full-batch loss and
/// accuracy, extract SGN and run the projection battery. One direction set
/// and one Gaussian baseline serve the whole run.
inline std::vector<ProbeResult> train_and_probe(const TrainConfig& config, const Dataset& data,
                                                const ProbeConfig& probe,
                                                const Dataset* test_data = nullptr,
                                                const CheckpointHook& hook = {}) {
    data.validate();
    config.validate(data);
    ModelState model = init_model(config.layer_sizes(data), config.seed, config.activation);
    const std::size_t p = model.parameter_count();
    const auto dirs = random_directions(p, probe.directions, derive_seed(config.seed, streams::directions));
    const auto baseline = gaussian_baseline(config.sgn_minibatches, p, dirs, probe.level,
                                            derive_seed(config.seed, streams::baseline), probe.threads);

    std::vector<ProbeResult> results;
    for (std::size_t t = 0;; ++t) {
        if (t % config.checkpoint_every == 0) {
            Checkpoint cp;
            cp.iteration = static_cast<std::int64_t>(t);
            cp.model = model;
            const auto train_eval = evaluate(model, data);
            cp.loss = train_eval.loss;
            cp.accuracy = train_eval.accuracy;
            if (test_data) {
                const auto test_eval = evaluate(model, *test_data);
                cp.test_loss = test_eval.loss;
                cp.test_accuracy = test_eval.accuracy;
            }
            auto noise = extract_sgn(model, data, config.batch_size, config.sgn_minibatches,
                                     derive_seed(config.seed, streams::probe_batch, t), probe.threads,
                                     config.full_batch_probe);
            noise.meta().iteration = cp.iteration;
            if (hook) hook(cp, noise);
            auto report = battery(noise, dirs, probe.level, baseline, probe.threads);
            results.push_back({std::move(cp), report});
        }
        if (t == config.iterations) break;
        const auto batch = sample_batch(data.n, config.batch_size, derive_seed(config.seed, streams::train_batch, t));
        model = sgd_step(model, data, batch, config.learning_rate);
    }
    return results;
}

}  // namespace gradnoise
